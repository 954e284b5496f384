#include "segd/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "segd/error.hpp"

namespace segd {

bool is_valid_label_code(std::uint8_t code) { return code <= 5 || code == 255; }

std::string_view label_name(Label label) {
  switch (label) {
    case Label::ExteriorAir: return "EXTERIOR_AIR";
    case Label::Support: return "SUPPORT";
    case Label::Bandage: return "BANDAGE";
    case Label::Body: return "BODY";
    case Label::Metal: return "METAL";
    case Label::Hollow: return "HOLLOW";
    case Label::Unknown: return "UNKNOWN";
  }
  return "INVALID";
}

void validate_dims(const Dims& dims) {
  if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0) {
    throw InvalidArgument("volume dims must be positive");
  }
}

void validate_spacing(const Spacing& spacing) {
  auto ok = [](float s) { return std::isfinite(s) && s > 0.0f; };
  if (!ok(spacing.sx) || !ok(spacing.sy) || !ok(spacing.sz)) {
    throw InvalidArgument("voxel spacing must be strictly positive");
  }
}

template <class T>
Grid3<T>::Grid3(Dims dims, Spacing spacing, T fill) : dims_(dims), spacing_(spacing) {
  validate_dims(dims);
  validate_spacing(spacing);
  data_.assign(dims.count(), fill);
}

template <class T>
Grid3<T>::Grid3(Dims dims, Spacing spacing, std::vector<T> data)
    : dims_(dims), spacing_(spacing), data_(std::move(data)) {
  validate_dims(dims);
  validate_spacing(spacing);
  if (data_.size() != dims.count()) {
    throw DimensionMismatch("voxel count " + std::to_string(data_.size()) + " does not match dims " +
                            std::to_string(dims.count()));
  }
}

template <class T>
Image<T> Grid3<T>::frame_image(int z) const {
  Image<T> image;
  image.width = dims_.nx;
  image.height = dims_.ny;
  auto f = frame(z);
  image.pixels.assign(f.begin(), f.end());
  return image;
}

template <class T>
void Grid3<T>::set_frame(int z, const Image<T>& image) {
  if (image.width != dims_.nx || image.height != dims_.ny) {
    throw DimensionMismatch("frame image does not match volume dims");
  }
  std::copy(image.pixels.begin(), image.pixels.end(), frame(z).begin());
}

template class Grid3<Hu>;
template class Grid3<Label>;

namespace {
void check_hu(const std::vector<Hu>& voxels) {
  for (Hu v : voxels) {
    if (v < kMinHu) throw InvalidArgument("HU value below -1024: " + std::to_string(v));
  }
}
void check_labels(const std::vector<Label>& labels) {
  for (Label l : labels) {
    if (!is_valid_label_code(static_cast<std::uint8_t>(l))) {
      throw InvalidArgument("undeclared label code " + std::to_string(static_cast<int>(l)));
    }
  }
}
}  // namespace

Volume::Volume(Dims dims, Spacing spacing, Hu fill) : Grid3<Hu>(dims, spacing, fill) {
  check_hu(data());
}

Volume::Volume(Dims dims, Spacing spacing, std::vector<Hu> voxels)
    : Grid3<Hu>(dims, spacing, std::move(voxels)) {
  check_hu(data());
}

LabelVolume::LabelVolume(Dims dims, Spacing spacing, Label fill) : Grid3<Label>(dims, spacing, fill) {
  check_labels(data());
}

LabelVolume::LabelVolume(Dims dims, Spacing spacing, std::vector<Label> labels)
    : Grid3<Label>(dims, spacing, std::move(labels)) {
  check_labels(data());
}

Mask LabelVolume::class_mask(int z, Label label) const {
  Mask mask(dims().nx, dims().ny, 0);
  auto f = frame(z);
  for (std::size_t i = 0; i < f.size(); ++i) mask.pixels[i] = f[i] == label ? 1 : 0;
  return mask;
}

std::size_t LabelVolume::count(Label label) const {
  return static_cast<std::size_t>(std::count(data().begin(), data().end(), label));
}

}  // namespace segd
