#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "segd/volume.hpp"

namespace segd {

enum class Axis { Axial, Coronal, Sagittal };

Axis parse_axis(std::string_view name);
std::string_view axis_name(Axis axis);
int axis_extent(const Dims& dims, Axis axis);

// Axial: (nx, ny) at z=index. Coronal: (nx, nz) at y=index. Sagittal: (ny, nz) at x=index.
HuImage slice(const Volume& v, Axis axis, int index);
Image<Label> slice(const LabelVolume& labels, Axis axis, int index);

// Linear HU window; <= center-width/2 maps to 0, >= center+width/2 to 255, rounded half-up.
std::uint8_t window_value(int hu, double center, double width);
GrayImage window_to_image(const HuImage& slice, double center, double width);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};
using RgbImage = Image<Rgb>;

// Fixed display color per class; nullopt means the class is drawn untinted.
std::optional<Rgb> label_color(Label label);

// Blends class colors over a grayscale image at 40% opacity.
RgbImage overlay_labels(const GrayImage& gray, const Image<Label>& labels);
RgbImage to_rgb(const GrayImage& gray);

}  // namespace segd
