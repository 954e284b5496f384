#include "segd/scribbles.hpp"

#include <algorithm>
#include <cmath>

#include "segd/error.hpp"
#include "segd/volume_io.hpp"
#include "text_records.hpp"

namespace segd {

using namespace detail;

std::vector<ScribbleRecord> parse_scribbles(std::string_view text) {
  std::vector<ScribbleRecord> out;
  for_each_record(text, [&](int line_no, const std::vector<std::string_view>& f) {
    if (f.size() < 5 || (f.size() - 3) % 2 != 0) bad_line(line_no, "expected frame,class,radius followed by x,y pairs");
    ScribbleRecord r;
    r.frame = to_int(f[0], line_no);
    if (f[1] == "FG" || f[1] == "fg") {
      r.cls = ScribbleClass::Fg;
    } else if (f[1] == "BG" || f[1] == "bg") {
      r.cls = ScribbleClass::Bg;
    } else {
      bad_line(line_no, "class must be FG or BG");
    }
    r.radius = to_int(f[2], line_no);
    if (r.radius < 1) bad_line(line_no, "radius must be at least 1");
    for (std::size_t i = 3; i < f.size(); i += 2) r.points.push_back({to_double(f[i], line_no), to_double(f[i + 1], line_no)});
    out.push_back(std::move(r));
  });
  return out;
}

std::string format_scribbles(const std::vector<ScribbleRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += std::to_string(r.frame) + (r.cls == ScribbleClass::Fg ? ",FG," : ",BG,") + std::to_string(r.radius);
    for (const auto& p : r.points) out += "," + number(p.x) + "," + number(p.y);
    out += "\n";
  }
  return out;
}

std::vector<ScribbleRecord> load_scribbles(const std::filesystem::path& path) { return parse_scribbles(read_text(path)); }

std::vector<SeedPoint> parse_seeds(std::string_view text) {
  std::vector<SeedPoint> out;
  for_each_record(text, [&](int line_no, const std::vector<std::string_view>& f) {
    if (f.size() != 3) bad_line(line_no, "expected frame,x,y");
    out.push_back({to_int(f[0], line_no), to_int(f[1], line_no), to_int(f[2], line_no)});
  });
  return out;
}

std::string format_seeds(const std::vector<SeedPoint>& seeds) {
  std::string out;
  for (const auto& s : seeds) out += std::to_string(s.frame) + "," + std::to_string(s.x) + "," + std::to_string(s.y) + "\n";
  return out;
}

std::vector<SeedPoint> load_seeds(const std::filesystem::path& path) { return parse_seeds(read_text(path)); }

std::size_t HardLabelMap::count(HardLabel l) const { return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l)); }

std::optional<std::string> scribble_problem(const ScribbleRecord& r, Dims dims) {
  if (r.frame < 0 || r.frame >= dims.nz) return "frame " + std::to_string(r.frame) + " out of range";
  if (r.radius < 1) return "radius below 1";
  if (r.points.empty()) return "no points";
  bool inside = std::all_of(r.points.begin(), r.points.end(), [&](const Point2& p) {
    return p.x >= 0 && p.y >= 0 && p.x <= dims.nx - 1 && p.y <= dims.ny - 1;
  });
  if (!inside) return "point outside the frame";
  return std::nullopt;
}

std::optional<std::string> seed_problem(const SeedPoint& p, Dims dims) {
  if (p.frame < 0 || p.frame >= dims.nz) return "frame " + std::to_string(p.frame) + " out of range";
  if (p.x < 0 || p.y < 0 || p.x >= dims.nx || p.y >= dims.ny) return "point outside the frame";
  return std::nullopt;
}

RasterizedScribbles rasterize_scribbles(const std::vector<ScribbleRecord>& records, Dims dims) {
  validate_dims(dims);
  RasterizedScribbles out{HardLabelMap(dims), {}};
  for (std::size_t idx = 0; idx < records.size(); ++idx) {
    const ScribbleRecord& r = records[idx];
    if (auto why = scribble_problem(r, dims)) {
      out.warnings.push_back("scribble record " + std::to_string(idx + 1) + " rejected: " + *why);
      continue;
    }
    const HardLabel value = r.cls == ScribbleClass::Fg ? HardLabel::Fg : HardLabel::Bg;
    const double r2 = static_cast<double>(r.radius) * r.radius;
    HardLabel* frame = out.map.labels.data() + static_cast<std::size_t>(r.frame) * dims.frame_size();
    // Each polyline piece is a capsule: pixels within radius of the segment.
    for (std::size_t s = 0; s < r.points.size(); ++s) {
      Point2 a = r.points[s];
      Point2 b = s + 1 < r.points.size() ? r.points[s + 1] : a;
      if (s + 1 == r.points.size() && r.points.size() > 1) break;
      int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - r.radius)));
      int x1 = std::min(dims.nx - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + r.radius)));
      int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - r.radius)));
      int y1 = std::min(dims.ny - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + r.radius)));
      double dx = b.x - a.x, dy = b.y - a.y;
      double len2 = dx * dx + dy * dy;
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          // Division-free form, so pixels exactly on the boundary of integer strokes are kept.
          double px = x - a.x, py = y - a.y;
          double dot = px * dx + py * dy, ap2 = px * px + py * py;
          bool hit;
          if (len2 == 0 || dot <= 0) hit = ap2 <= r2;
          else if (dot >= len2) hit = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y) <= r2;
          else hit = ap2 * len2 - dot * dot <= r2 * len2;
          if (hit) frame[static_cast<std::size_t>(y) * dims.nx + x] = value;
        }
    }
  }
  return out;
}

}  // namespace segd
