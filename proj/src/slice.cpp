#include "segd/slice.hpp"

#include <cmath>
#include <string>

#include "segd/error.hpp"

namespace segd {

Axis parse_axis(std::string_view name) {
  if (name == "axial") return Axis::Axial;
  if (name == "coronal") return Axis::Coronal;
  if (name == "sagittal") return Axis::Sagittal;
  throw InvalidArgument("unknown axis '" + std::string(name) + "'");
}

std::string_view axis_name(Axis axis) {
  switch (axis) {
    case Axis::Axial: return "axial";
    case Axis::Coronal: return "coronal";
    case Axis::Sagittal: return "sagittal";
  }
  return "?";
}

int axis_extent(const Dims& dims, Axis axis) {
  switch (axis) {
    case Axis::Axial: return dims.nz;
    case Axis::Coronal: return dims.ny;
    case Axis::Sagittal: return dims.nx;
  }
  return 0;
}

namespace {

template <class T>
Image<T> slice_grid(const Grid3<T>& g, Axis axis, int index) {
  const Dims& d = g.dims();
  int extent = axis_extent(d, axis);
  if (index < 0 || index >= extent) {
    throw RangeError("slice index " + std::to_string(index) + " outside [0, " + std::to_string(extent) + ")");
  }
  switch (axis) {
    case Axis::Axial:
      return g.frame_image(index);
    case Axis::Coronal: {
      Image<T> out(d.nx, d.nz);
      for (int z = 0; z < d.nz; ++z)
        for (int x = 0; x < d.nx; ++x) out.at(x, z) = g.at(x, index, z);
      return out;
    }
    case Axis::Sagittal: {
      Image<T> out(d.ny, d.nz);
      for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y) out.at(y, z) = g.at(index, y, z);
      return out;
    }
  }
  return {};
}

}  // namespace

HuImage slice(const Volume& v, Axis axis, int index) { return slice_grid<Hu>(v, axis, index); }
Image<Label> slice(const LabelVolume& labels, Axis axis, int index) { return slice_grid<Label>(labels, axis, index); }

std::uint8_t window_value(int hu, double center, double width) {
  double lo = center - width / 2.0;
  double hi = center + width / 2.0;
  if (hu <= lo) return 0;
  if (hu >= hi) return 255;
  double v = std::floor(255.0 * (hu - lo) / width + 0.5);
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

GrayImage window_to_image(const HuImage& slice, double center, double width) {
  if (!(width > 0.0)) throw InvalidArgument("window width must be positive");
  GrayImage out(slice.width, slice.height);
  for (std::size_t i = 0; i < slice.pixels.size(); ++i) out.pixels[i] = window_value(slice.pixels[i], center, width);
  return out;
}

std::optional<Rgb> label_color(Label label) {
  switch (label) {
    case Label::Support: return Rgb{139, 90, 43};
    case Label::Bandage: return Rgb{230, 200, 60};
    case Label::Body: return Rgb{220, 40, 40};
    case Label::Metal: return Rgb{0, 220, 255};
    case Label::Hollow: return Rgb{40, 80, 230};
    case Label::ExteriorAir:
    case Label::Unknown:
      return std::nullopt;
  }
  return std::nullopt;
}

RgbImage to_rgb(const GrayImage& gray) {
  RgbImage out(gray.width, gray.height);
  for (std::size_t i = 0; i < gray.pixels.size(); ++i) {
    std::uint8_t g = gray.pixels[i];
    out.pixels[i] = {g, g, g};
  }
  return out;
}

RgbImage overlay_labels(const GrayImage& gray, const Image<Label>& labels) {
  if (gray.width != labels.width || gray.height != labels.height) {
    throw DimensionMismatch("overlay label image does not match slice");
  }
  RgbImage out = to_rgb(gray);
  auto blend = [](std::uint8_t base, std::uint8_t tint) {
    return static_cast<std::uint8_t>(std::floor(0.6 * base + 0.4 * tint + 0.5));
  };
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    if (auto c = label_color(labels.pixels[i])) {
      std::uint8_t g = gray.pixels[i];
      out.pixels[i] = {blend(g, c->r), blend(g, c->g), blend(g, c->b)};
    }
  }
  return out;
}

}  // namespace segd
