#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "segd/volume.hpp"

namespace segd {

// MVOL container: "MVOL" | u16 version | u32 nx,ny,nz | f32 sx,sy,sz | u8 dtype | payload.
// Little-endian throughout, x-fastest voxel order.
inline constexpr std::size_t kMvolHeaderBytes = 31;
inline constexpr std::uint16_t kMvolVersion = 1;

enum class MvolType : std::uint8_t { Hu16 = 0, Label8 = 1 };

std::vector<std::uint8_t> encode_volume(const Volume& v);
std::vector<std::uint8_t> encode_labels(const LabelVolume& labels);
Volume decode_volume(std::span<const std::uint8_t> bytes);
LabelVolume decode_labels(std::span<const std::uint8_t> bytes);

Volume load_volume(const std::filesystem::path& path);
LabelVolume load_labels(const std::filesystem::path& path);
void save_volume(const Volume& v, const std::filesystem::path& path);
void save_labels(const LabelVolume& labels, const std::filesystem::path& path);

// Writes to a sibling temp file then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace segd
