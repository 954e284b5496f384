#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace segd {

using Hu = std::int16_t;

inline constexpr int kMinHu = -1024;
inline constexpr int kMaxHu = 32767;

struct Dims {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  std::size_t frame_size() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t count() const { return frame_size() * nz; }
  bool operator==(const Dims&) const = default;
};

struct Spacing {
  float sx = 1.0f;
  float sy = 1.0f;
  float sz = 1.0f;
  bool operator==(const Spacing&) const = default;
};

// Semantic class codes. Values are the on-disk byte codes.
enum class Label : std::uint8_t {
  ExteriorAir = 0,
  Support = 1,
  Bandage = 2,
  Body = 3,
  Metal = 4,
  Hollow = 5,
  Unknown = 255,
};

bool is_valid_label_code(std::uint8_t code);
std::string_view label_name(Label label);

// Image-plane point in pixel units.
struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

// Row-major 2D image, x fastest.
template <class T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> pixels;

  Image() = default;
  Image(int w, int h, T fill = T{}) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  T& at(int x, int y) { return pixels[index(x, y)]; }
  const T& at(int x, int y) const { return pixels[index(x, y)]; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool operator==(const Image&) const = default;
};

using HuImage = Image<Hu>;
using Mask = Image<std::uint8_t>;
using GrayImage = Image<std::uint8_t>;

// Dense 3D grid with x-fastest, then y, then z ordering.
template <class T>
class Grid3 {
 public:
  Grid3() = default;
  Grid3(Dims dims, Spacing spacing, T fill = T{});
  Grid3(Dims dims, Spacing spacing, std::vector<T> data);

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }

  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * dims_.ny + y) * dims_.nx + x;
  }
  T& at(int x, int y, int z) { return data_[index(x, y, z)]; }
  const T& at(int x, int y, int z) const { return data_[index(x, y, z)]; }
  bool contains(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_.nx && y < dims_.ny && z < dims_.nz;
  }

  std::span<T> frame(int z) { return {data_.data() + static_cast<std::size_t>(z) * dims_.frame_size(), dims_.frame_size()}; }
  std::span<const T> frame(int z) const {
    return {data_.data() + static_cast<std::size_t>(z) * dims_.frame_size(), dims_.frame_size()};
  }

  Image<T> frame_image(int z) const;
  void set_frame(int z, const Image<T>& image);

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Grid3&) const = default;

 private:
  Dims dims_{};
  Spacing spacing_{};
  std::vector<T> data_;
};

// Radiodensity volume. Construction validates dims, spacing and HU range.
class Volume : public Grid3<Hu> {
 public:
  Volume() = default;
  Volume(Dims dims, Spacing spacing, Hu fill = -1000);
  Volume(Dims dims, Spacing spacing, std::vector<Hu> voxels);
};

class LabelVolume : public Grid3<Label> {
 public:
  LabelVolume() = default;
  LabelVolume(Dims dims, Spacing spacing, Label fill = Label::Unknown);
  LabelVolume(Dims dims, Spacing spacing, std::vector<Label> labels);

  // Binary mask of one class in frame z.
  Mask class_mask(int z, Label label) const;
  std::size_t count(Label label) const;
};

void validate_dims(const Dims& dims);
void validate_spacing(const Spacing& spacing);

}  // namespace segd
