#include "segd/png_image.hpp"

#include <png.h>

#include <csetjmp>
#include <cstring>

#include "segd/error.hpp"
#include "segd/volume_io.hpp"

namespace segd {
namespace {

void on_png_warning(png_structp, png_const_charp) {}

void append_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

std::vector<std::uint8_t> encode_raw(int width, int height, int color_type, int channels, const std::uint8_t* pixels) {
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, on_png_warning);
  if (!png) throw IoError("png: cannot create writer");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: encode failed");
  }
  png_set_write_fn(png, &out, append_bytes, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, pixels + static_cast<std::size_t>(y) * width * channels);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

struct ReadCursor {
  const std::vector<std::uint8_t>* bytes;
  std::size_t offset;
};

void read_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + length > cur->bytes->size()) png_error(png, "unexpected end of data");
  std::memcpy(data, cur->bytes->data() + cur->offset, length);
  cur->offset += length;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const GrayImage& image) {
  return encode_raw(image.width, image.height, PNG_COLOR_TYPE_GRAY, 1, image.pixels.data());
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  static_assert(sizeof(Rgb) == 3);
  return encode_raw(image.width, image.height, PNG_COLOR_TYPE_RGB, 3,
                    reinterpret_cast<const std::uint8_t*>(image.pixels.data()));
}

void write_png(const GrayImage& image, const std::filesystem::path& path) { write_file_atomic(path, encode_png(image)); }
void write_png(const RgbImage& image, const std::filesystem::path& path) { write_file_atomic(path, encode_png(image)); }

DecodedPng decode_png(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw FormatError("not a PNG stream");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, on_png_warning);
  if (!png) throw IoError("png: cannot create reader");
  png_infop info = png_create_info_struct(png);
  DecodedPng out;
  ReadCursor cur{&bytes, 0};
  bool unsupported = false;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("png: decode failed");
  }
  png_set_read_fn(png, &cur, read_bytes);
  png_read_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  int color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) != 8 || (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB)) {
    unsupported = true;
  } else {
    out.channels = color == PNG_COLOR_TYPE_GRAY ? 1 : 3;
    out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
    for (int y = 0; y < out.height; ++y) {
      png_read_row(png, out.pixels.data() + static_cast<std::size_t>(y) * out.width * out.channels, nullptr);
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (unsupported) throw FormatError("only 8-bit gray/RGB PNG is supported");
  return out;
}

}  // namespace segd
