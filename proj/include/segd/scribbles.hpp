#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "segd/volume.hpp"

namespace segd {

enum class ScribbleClass : std::uint8_t { Fg, Bg };

// One brush stroke: a polyline swept by a disk of `radius` pixels in frame `frame`.
struct ScribbleRecord {
  int frame = 0;
  ScribbleClass cls = ScribbleClass::Fg;
  int radius = 1;
  std::vector<Point2> points;
  bool operator==(const ScribbleRecord&) const = default;
};

struct SeedPoint {
  int frame = 0;
  int x = 0;
  int y = 0;
  bool operator==(const SeedPoint&) const = default;
};

// Lines "frame,class,radius,x1,y1,x2,y2,..." with class FG or BG. '#' comments allowed.
std::vector<ScribbleRecord> parse_scribbles(std::string_view text);
std::string format_scribbles(const std::vector<ScribbleRecord>& records);
std::vector<ScribbleRecord> load_scribbles(const std::filesystem::path& path);

// Lines "frame,x,y".
std::vector<SeedPoint> parse_seeds(std::string_view text);
std::string format_seeds(const std::vector<SeedPoint>& seeds);
std::vector<SeedPoint> load_seeds(const std::filesystem::path& path);

enum class HardLabel : std::uint8_t { None = 0, Fg = 1, Bg = 2 };

struct HardLabelMap {
  Dims dims;
  std::vector<HardLabel> labels;  // x fastest, then y, then z

  HardLabelMap() = default;
  explicit HardLabelMap(Dims d) : dims(d), labels(d.count(), HardLabel::None) {}
  HardLabel at(int x, int y, int z) const {
    return labels[(static_cast<std::size_t>(z) * dims.ny + y) * dims.nx + x];
  }
  std::size_t count(HardLabel l) const;
};

struct RasterizedScribbles {
  HardLabelMap map;
  std::vector<std::string> warnings;  // one per rejected record
};

// Reason a record cannot be used with a volume of `dims`, or nullopt.
std::optional<std::string> scribble_problem(const ScribbleRecord& r, Dims dims);
std::optional<std::string> seed_problem(const SeedPoint& p, Dims dims);

// Pixels within `radius` of the polyline get the record's class; later records win.
// Records with an out-of-range frame or point are skipped with a warning.
RasterizedScribbles rasterize_scribbles(const std::vector<ScribbleRecord>& records, Dims dims);

}  // namespace segd
