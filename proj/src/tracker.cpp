#include "segd/tracker.hpp"

#include <algorithm>
#include <tuple>

#include "segd/config.hpp"
#include "segd/error.hpp"

namespace segd {

std::vector<Segment> extract_segments(const Mask& mask, int frame, int min_px) {
  const int w = mask.width, h = mask.height;
  std::vector<std::uint8_t> seen(mask.pixels.size(), 0);
  std::vector<Segment> out;
  std::vector<int> stack;
  for (int start = 0; start < w * h; ++start) {
    if (!mask.pixels[start] || seen[start]) continue;
    Segment s;
    s.frame = frame;
    s.width = w;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      int p = stack.back();
      stack.pop_back();
      s.pixels.push_back(p);
      int px = p % w, py = p / w;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          int qx = px + dx, qy = py + dy;
          if ((dx == 0 && dy == 0) || qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
          int q = qy * w + qx;
          if (mask.pixels[q] && !seen[q]) {
            seen[q] = 1;
            stack.push_back(q);
          }
        }
    }
    if (static_cast<int>(s.pixels.size()) < min_px) continue;
    std::sort(s.pixels.begin(), s.pixels.end());
    s.x0 = w;
    s.y0 = h;
    double sx = 0, sy = 0;
    for (int p : s.pixels) {
      int x = p % w, y = p / w;
      sx += x;
      sy += y;
      s.x0 = std::min(s.x0, x);
      s.y0 = std::min(s.y0, y);
      s.x1 = std::max(s.x1, x);
      s.y1 = std::max(s.y1, y);
    }
    s.cx = sx / static_cast<double>(s.pixels.size());
    s.cy = sy / static_cast<double>(s.pixels.size());
    out.push_back(std::move(s));
  }
  return out;
}

double pixel_iou(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

double pixel_iou(const Segment& a, const Segment& b) {
  if (a.x1 < b.x0 || b.x1 < a.x0 || a.y1 < b.y0 || b.y1 < a.y0) return a.pixels.empty() && b.pixels.empty() ? 1.0 : 0.0;
  return pixel_iou(a.pixels, b.pixels);
}

double similarity(const std::deque<Segment>& history, const Segment& s) {
  if (history.empty()) throw InvalidArgument("similarity needs a non-empty history");
  double sum = 0.0;
  for (const auto& h : history) sum += pixel_iou(h, s);
  return sum / static_cast<double>(history.size());
}

namespace {

void push_history(Track& t, const Segment& s, int history) {
  t.history.push_front(s);
  while (static_cast<int>(t.history.size()) > history) t.history.pop_back();
  t.end_frame = s.frame;
  t.areas.push_back(s.area());
}

}  // namespace

std::vector<int> step_tracks(std::vector<Track>& tracks, const std::vector<Segment>& segments, double epsilon,
                             int history) {
  struct Pair {
    double phi;
    int track;  // index into tracks
    int segment;
  };
  std::vector<Pair> pairs;
  for (int t = 0; t < static_cast<int>(tracks.size()); ++t) {
    if (!tracks[t].active) continue;
    for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
      double phi = similarity(tracks[t].history, segments[s]);
      if (phi >= epsilon) pairs.push_back({phi, t, s});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
    if (a.phi != b.phi) return a.phi > b.phi;
    return std::tie(tracks[a.track].id, a.segment) < std::tie(tracks[b.track].id, b.segment);
  });
  std::vector<int> owner(segments.size(), -1);
  std::vector<char> taken(tracks.size(), 0);
  for (const Pair& p : pairs) {
    if (taken[p.track] || owner[p.segment] != -1) continue;
    taken[p.track] = 1;
    owner[p.segment] = tracks[p.track].id;
    push_history(tracks[p.track], segments[p.segment], history);
  }
  for (std::size_t t = 0; t < tracks.size(); ++t)
    if (tracks[t].active && !taken[t]) tracks[t].active = false;
  return owner;
}

bool Segment::contains(int x, int y) const {
  if (x < x0 || x > x1 || y < y0 || y > y1) return false;
  return std::binary_search(pixels.begin(), pixels.end(), y * width + x);
}

Track seed_track(int id, int frame, int x, int y, const std::vector<Segment>& segments, int history) {
  if (history < 1) throw InvalidArgument("history must be at least 1");
  for (const auto& s : segments) {
    if (s.frame != frame || !s.contains(x, y)) continue;
    Track t;
    t.id = id;
    t.origin = TrackOrigin::Seed;
    t.start_frame = frame;
    t.end_frame = frame;
    t.history.assign(static_cast<std::size_t>(history), s);
    t.areas.push_back(s.area());
    return t;
  }
  throw SeedMiss("seed (" + std::to_string(x) + ", " + std::to_string(y) + ") in frame " + std::to_string(frame) +
                 " lies in no body segment");
}

void TrackingConfig::apply(const KeyValues& kv) {
  kv.read("epsilon", epsilon);
  kv.read("history", history);
  kv.read("auto_init", auto_init);
  kv.read("min_track_area", min_track_area);
  kv.read("min_segment_px", min_segment_px);
}

void TrackingConfig::validate() const {
  if (!(epsilon >= 0 && epsilon <= 1)) throw InvalidArgument("epsilon must lie in [0, 1]");
  if (history < 1) throw InvalidArgument("history must be at least 1");
  if (min_track_area < 1) throw InvalidArgument("min_track_area must be positive");
  if (min_segment_px < 1) throw InvalidArgument("min_segment_px must be positive");
}

TrackingResult run_tracking(const LabelVolume& labels, const std::vector<SeedPoint>& seeds, const TrackingConfig& cfg) {
  cfg.validate();
  if (seeds.empty() && !cfg.auto_init) throw NoTracksError("tracking needs at least one seed or auto-init");
  const Dims& d = labels.dims();
  TrackingResult result;
  result.labels = labels;
  std::vector<std::vector<SeedPoint>> seeds_by_frame(d.nz);
  for (const auto& s : seeds) {
    if (s.frame < 0 || s.frame >= d.nz || s.x < 0 || s.y < 0 || s.x >= d.nx || s.y >= d.ny) {
      result.warnings.push_back("seed " + std::to_string(s.frame) + "," + std::to_string(s.x) + "," +
                                std::to_string(s.y) + " is outside the volume");
      continue;
    }
    seeds_by_frame[s.frame].push_back(s);
  }

  int next_id = 1;
  for (int z = 0; z < d.nz; ++z) {
    std::vector<Segment> segments = extract_segments(labels.class_mask(z, Label::Body), z, cfg.min_segment_px);
    std::vector<int> owner = step_tracks(result.tracks, segments, cfg.epsilon, cfg.history);
    for (const auto& seed : seeds_by_frame[z]) {
      try {
        Track t = seed_track(next_id, z, seed.x, seed.y, segments, cfg.history);
        auto it = std::find_if(segments.begin(), segments.end(),
                               [&](const Segment& s) { return s.contains(seed.x, seed.y); });
        std::size_t idx = static_cast<std::size_t>(it - segments.begin());
        if (owner[idx] != -1) continue;  // already tracked
        owner[idx] = t.id;
        result.tracks.push_back(std::move(t));
        ++next_id;
      } catch (const SeedMiss& e) {
        result.warnings.push_back(e.what());
      }
    }
    if (cfg.auto_init) {
      for (std::size_t i = 0; i < segments.size(); ++i) {
        if (owner[i] != -1 || static_cast<int>(segments[i].area()) < cfg.min_track_area) continue;
        Track t;
        t.id = next_id++;
        t.origin = TrackOrigin::Auto;
        t.start_frame = t.end_frame = z;
        t.history.assign(static_cast<std::size_t>(cfg.history), segments[i]);
        t.areas.push_back(segments[i].area());
        owner[i] = t.id;
        result.tracks.push_back(std::move(t));
      }
    }
    auto f = result.labels.frame(z);
    std::vector<std::uint8_t> keep(d.frame_size(), 0);
    for (std::size_t i = 0; i < segments.size(); ++i)
      if (owner[i] != -1)
        for (int p : segments[i].pixels) keep[p] = 1;
    for (std::size_t p = 0; p < f.size(); ++p)
      if (f[p] == Label::Body && !keep[p]) f[p] = Label::Bandage;
  }
  return result;
}

std::string format_track_report(const std::vector<Track>& tracks) {
  std::string out = "# track,origin,start_frame,end_frame\n";
  for (const auto& t : tracks) {
    out += std::to_string(t.id) + (t.origin == TrackOrigin::Seed ? ",seed," : ",auto,") + std::to_string(t.start_frame) +
           "," + std::to_string(t.end_frame) + "\n";
  }
  out += "# track,frame,area\n";
  for (const auto& t : tracks)
    for (std::size_t k = 0; k < t.areas.size(); ++k)
      out += std::to_string(t.id) + "," + std::to_string(t.start_frame + static_cast<int>(k)) + "," +
             std::to_string(t.areas[k]) + "\n";
  return out;
}

}  // namespace segd
