#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "segd/slice.hpp"

namespace segd {

std::vector<std::uint8_t> encode_png(const GrayImage& image);
std::vector<std::uint8_t> encode_png(const RgbImage& image);
void write_png(const GrayImage& image, const std::filesystem::path& path);
void write_png(const RgbImage& image, const std::filesystem::path& path);

// Decodes 8-bit gray or RGB PNGs produced by encode_png; used by tests and the service client.
struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};
DecodedPng decode_png(const std::vector<std::uint8_t>& bytes);

}  // namespace segd
