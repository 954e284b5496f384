#include "segd/volume_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "segd/error.hpp"

namespace segd {
namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<std::uint8_t> encode_header(const Dims& d, const Spacing& s, MvolType type, std::size_t payload) {
  std::vector<std::uint8_t> out;
  out.reserve(kMvolHeaderBytes + payload);
  for (char c : {'M', 'V', 'O', 'L'}) out.push_back(static_cast<std::uint8_t>(c));
  put_u16(out, kMvolVersion);
  put_u32(out, static_cast<std::uint32_t>(d.nx));
  put_u32(out, static_cast<std::uint32_t>(d.ny));
  put_u32(out, static_cast<std::uint32_t>(d.nz));
  put_u32(out, std::bit_cast<std::uint32_t>(s.sx));
  put_u32(out, std::bit_cast<std::uint32_t>(s.sy));
  put_u32(out, std::bit_cast<std::uint32_t>(s.sz));
  out.push_back(static_cast<std::uint8_t>(type));
  return out;
}

struct Header {
  Dims dims;
  Spacing spacing;
  MvolType type;
};

Header decode_header(std::span<const std::uint8_t> bytes, MvolType expected) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "MVOL", 4) != 0) {
    throw FormatError("missing MVOL magic");
  }
  if (bytes.size() < kMvolHeaderBytes) throw TruncatedError("MVOL header truncated");
  const std::uint8_t* p = bytes.data();
  if (get_u16(p + 4) != kMvolVersion) {
    throw FormatError("unsupported MVOL version " + std::to_string(get_u16(p + 4)));
  }
  Header h;
  std::uint32_t nx = get_u32(p + 6), ny = get_u32(p + 10), nz = get_u32(p + 14);
  if (nx == 0 || ny == 0 || nz == 0 || nx > 1u << 20 || ny > 1u << 20 || nz > 1u << 20) {
    throw FormatError("MVOL dims out of range");
  }
  h.dims = {static_cast<int>(nx), static_cast<int>(ny), static_cast<int>(nz)};
  h.spacing = {std::bit_cast<float>(get_u32(p + 18)), std::bit_cast<float>(get_u32(p + 22)),
               std::bit_cast<float>(get_u32(p + 26))};
  std::uint8_t type = p[30];
  if (type > 1) throw FormatError("unknown MVOL dtype " + std::to_string(type));
  h.type = static_cast<MvolType>(type);
  if (h.type != expected) {
    throw FormatError(expected == MvolType::Hu16 ? "expected an HU volume (dtype 0)"
                                                 : "expected a label volume (dtype 1)");
  }
  std::size_t elem = h.type == MvolType::Hu16 ? 2 : 1;
  std::size_t want = h.dims.count() * elem;
  if (bytes.size() - kMvolHeaderBytes != want) {
    throw TruncatedError("MVOL payload has " + std::to_string(bytes.size() - kMvolHeaderBytes) +
                         " bytes, header declares " + std::to_string(want));
  }
  try {
    validate_spacing(h.spacing);
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
  return h;
}

}  // namespace

std::vector<std::uint8_t> encode_volume(const Volume& v) {
  auto out = encode_header(v.dims(), v.spacing(), MvolType::Hu16, v.data().size() * 2);
  for (Hu h : v.data()) put_u16(out, static_cast<std::uint16_t>(h));
  return out;
}

std::vector<std::uint8_t> encode_labels(const LabelVolume& labels) {
  auto out = encode_header(labels.dims(), labels.spacing(), MvolType::Label8, labels.data().size());
  for (Label l : labels.data()) out.push_back(static_cast<std::uint8_t>(l));
  return out;
}

Volume decode_volume(std::span<const std::uint8_t> bytes) {
  Header h = decode_header(bytes, MvolType::Hu16);
  std::vector<Hu> voxels(h.dims.count());
  const std::uint8_t* p = bytes.data() + kMvolHeaderBytes;
  for (std::size_t i = 0; i < voxels.size(); ++i) {
    voxels[i] = static_cast<Hu>(get_u16(p + 2 * i));
    if (voxels[i] < kMinHu) throw FormatError("HU value below -1024 at voxel " + std::to_string(i));
  }
  return Volume(h.dims, h.spacing, std::move(voxels));
}

LabelVolume decode_labels(std::span<const std::uint8_t> bytes) {
  Header h = decode_header(bytes, MvolType::Label8);
  std::vector<Label> labels(h.dims.count());
  const std::uint8_t* p = bytes.data() + kMvolHeaderBytes;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!is_valid_label_code(p[i])) {
      throw FormatError("undeclared label code " + std::to_string(p[i]) + " at voxel " + std::to_string(i));
    }
    labels[i] = static_cast<Label>(p[i]);
  }
  return LabelVolume(h.dims, h.spacing, std::move(labels));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot replace " + path.string());
  }
}

Volume load_volume(const std::filesystem::path& path) { return decode_volume(read_file(path)); }
LabelVolume load_labels(const std::filesystem::path& path) { return decode_labels(read_file(path)); }

void save_volume(const Volume& v, const std::filesystem::path& path) { write_file_atomic(path, encode_volume(v)); }
void save_labels(const LabelVolume& labels, const std::filesystem::path& path) {
  write_file_atomic(path, encode_labels(labels));
}

}  // namespace segd
