#include "segd/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

#include "segd/config.hpp"
#include "segd/error.hpp"

namespace segd {

void PreprocessConfig::apply(const KeyValues& kv) {
  kv.read("air_bin_width", bin_width);
  kv.read("air_smoothing_bins", smoothing_bins);
  kv.read("air_fallback", fallback_air_threshold);
  kv.read("metal_threshold", metal_threshold);
  kv.read("match_threshold", match_threshold);
  kv.read("hough_tolerance", hough_tolerance_deg);
  kv.read("min_metal_voxels", min_metal_voxels);
}

void PreprocessConfig::validate() const {
  if (!(bin_width > 0)) throw InvalidArgument("histogram bin width must be positive");
  if (smoothing_bins < 1) throw InvalidArgument("smoothing window must be at least one bin");
  if (!(match_threshold > 0 && match_threshold <= 1)) throw InvalidArgument("match threshold must lie in (0, 1]");
  if (hough_tolerance_deg < 0 || hough_tolerance_deg > 15) {
    throw InvalidArgument("Hough angle tolerance must lie in [0, 15] degrees");
  }
  if (min_metal_voxels < 1) throw InvalidArgument("minimum metal component size must be positive");
}

Histogram air_histogram(const Volume& v, const PreprocessConfig& cfg) {
  return make_histogram(std::span<const Hu>(v.data()), cfg.bin_width, cfg.smoothing_bins);
}

double choose_air_threshold(const Volume& v, const PreprocessConfig& cfg) {
  cfg.validate();
  return valley_between_peaks(air_histogram(v, cfg)).value_or(cfg.fallback_air_threshold);
}

Mask segment_exterior_air(const HuImage& frame, double threshold) {
  const int w = frame.width, h = frame.height;
  Mask mask(w, h, 0);
  std::vector<int> stack;
  auto seed = [&](int x, int y) {
    if (frame.at(x, y) < threshold && !mask.at(x, y)) {
      mask.at(x, y) = 1;
      stack.push_back(static_cast<int>(mask.index(x, y)));
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  while (!stack.empty()) {
    int idx = stack.back();
    stack.pop_back();
    int x = idx % w, y = idx / w;
    if (x > 0) seed(x - 1, y);
    if (x + 1 < w) seed(x + 1, y);
    if (y > 0) seed(x, y - 1);
    if (y + 1 < h) seed(x, y + 1);
  }
  return mask;
}

Mask detect_hollow(const HuImage& frame, double air_threshold, const Mask& exterior) {
  Mask mask(frame.width, frame.height, 0);
  for (std::size_t i = 0; i < mask.pixels.size(); ++i) {
    mask.pixels[i] = frame.pixels[i] < air_threshold && !exterior.pixels[i] ? 1 : 0;
  }
  return mask;
}

std::vector<VerticalLine> hough_vertical_lines(const Mask& air_mask, double tolerance_deg, int min_votes) {
  const int w = air_mask.width, h = air_mask.height;
  std::vector<std::pair<int, int>> edges;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (air_mask.at(x, y)) continue;
      bool boundary = (x > 0 && air_mask.at(x - 1, y)) || (x + 1 < w && air_mask.at(x + 1, y)) ||
                      (y > 0 && air_mask.at(x, y - 1)) || (y + 1 < h && air_mask.at(x, y + 1));
      if (boundary) edges.emplace_back(x, y);
    }
  }
  const int steps = static_cast<int>(std::floor(tolerance_deg)) * 2 + 1;
  const int rho_offset = h;
  const int rho_bins = w + 2 * h + 1;
  std::vector<int> acc(static_cast<std::size_t>(steps) * rho_bins, 0);
  std::vector<double> sin_t(steps), cos_t(steps), angle(steps);
  for (int k = 0; k < steps; ++k) {
    angle[k] = 90.0 - std::floor(tolerance_deg) + k;
    double t = angle[k] * std::numbers::pi / 180.0;
    sin_t[k] = std::sin(t);
    cos_t[k] = std::cos(t);
  }
  // A line with direction angle t satisfies x*sin(t) - y*cos(t) = rho.
  for (auto [x, y] : edges) {
    for (int k = 0; k < steps; ++k) {
      int rho = static_cast<int>(std::lround(x * sin_t[k] - y * cos_t[k])) + rho_offset;
      if (rho >= 0 && rho < rho_bins) ++acc[static_cast<std::size_t>(k) * rho_bins + rho];
    }
  }
  // Best angle per rho, then local maxima along rho.
  std::vector<int> best_votes(rho_bins, 0), best_k(rho_bins, 0);
  for (int r = 0; r < rho_bins; ++r)
    for (int k = 0; k < steps; ++k) {
      int v = acc[static_cast<std::size_t>(k) * rho_bins + r];
      if (v > best_votes[r]) {
        best_votes[r] = v;
        best_k[r] = k;
      }
    }
  std::vector<VerticalLine> lines;
  for (int r = 0; r < rho_bins; ++r) {
    int v = best_votes[r];
    if (v < min_votes) continue;
    bool is_max = true;
    for (int d = -2; d <= 2 && is_max; ++d) {
      int q = r + d;
      if (d == 0 || q < 0 || q >= rho_bins) continue;
      if (best_votes[q] > v || (best_votes[q] == v && q < r)) is_max = false;
    }
    if (!is_max) continue;
    int k = best_k[r];
    double rho = r - rho_offset;
    double x_mid = (rho + (h / 2.0) * cos_t[k]) / sin_t[k];
    lines.push_back({x_mid, angle[k], v});
  }
  return lines;
}

namespace {

// Footprint of a binary template as horizontal runs per row.
struct TemplateRuns {
  int width = 0, height = 0;
  int footprint = 0;
  int first_col = 0, last_col = 0;
  int left_edge_height = 0;
  std::vector<std::vector<std::pair<int, int>>> rows;  // [begin, end)
};

TemplateRuns template_runs(const Image<Label>& tmpl) {
  TemplateRuns t;
  t.width = tmpl.width;
  t.height = tmpl.height;
  t.rows.resize(tmpl.height);
  t.first_col = tmpl.width;
  t.last_col = -1;
  for (int y = 0; y < tmpl.height; ++y) {
    int x = 0;
    while (x < tmpl.width) {
      if (tmpl.at(x, y) != Label::Support) {
        ++x;
        continue;
      }
      int b = x;
      while (x < tmpl.width && tmpl.at(x, y) == Label::Support) ++x;
      t.rows[y].emplace_back(b, x);
      t.footprint += x - b;
      t.first_col = std::min(t.first_col, b);
      t.last_col = std::max(t.last_col, x - 1);
    }
  }
  for (int y = 0; y < tmpl.height; ++y)
    if (t.first_col < tmpl.width && tmpl.at(t.first_col, y) == Label::Support) ++t.left_edge_height;
  return t;
}

// Row prefix sums and 2D integral images of the frame for O(1) window moments.
struct FrameSums {
  int w = 0, h = 0;
  std::vector<double> row_prefix;  // (w+1) per row
  std::vector<double> integral;    // (w+1)*(h+1)
  std::vector<double> integral_sq;

  explicit FrameSums(const HuImage& f) : w(f.width), h(f.height) {
    row_prefix.assign(static_cast<std::size_t>(w + 1) * h, 0.0);
    integral.assign(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
    integral_sq.assign(integral.size(), 0.0);
    for (int y = 0; y < h; ++y) {
      double rs = 0, rs2 = 0;
      for (int x = 0; x < w; ++x) {
        double v = f.at(x, y);
        rs += v;
        rs2 += v * v;
        row_prefix[static_cast<std::size_t>(y) * (w + 1) + x + 1] = rs;
        std::size_t i = static_cast<std::size_t>(y + 1) * (w + 1) + x + 1;
        integral[i] = integral[i - (w + 1)] + rs;
        integral_sq[i] = integral_sq[i - (w + 1)] + rs2;
      }
    }
  }

  double rect(const std::vector<double>& ii, int x0, int y0, int x1, int y1) const {
    auto at = [&](int x, int y) { return ii[static_cast<std::size_t>(y) * (w + 1) + x]; };
    return at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0);
  }
  double row_sum(int y, int x0, int x1) const {
    const double* r = &row_prefix[static_cast<std::size_t>(y) * (w + 1)];
    return r[x1] - r[x0];
  }
};

double ncc_at(const FrameSums& sums, const TemplateRuns& t, int ox, int oy) {
  const double n = static_cast<double>(t.width) * t.height;
  const double mean_t = t.footprint / n;
  const double var_t = t.footprint * (1.0 - mean_t);  // sum of squared deviations of a 0/1 template
  double s = sums.rect(sums.integral, ox, oy, ox + t.width, oy + t.height);
  double s2 = sums.rect(sums.integral_sq, ox, oy, ox + t.width, oy + t.height);
  double st = 0;
  for (int r = 0; r < t.height; ++r)
    for (auto [b, e] : t.rows[r]) st += sums.row_sum(oy + r, ox + b, ox + e);
  double var_i = s2 - s * s / n;
  if (var_t <= 0 || var_i <= 1e-9) return 0.0;
  return (st - mean_t * s) / std::sqrt(var_t * var_i);
}

}  // namespace

double template_ncc(const HuImage& frame, const Image<Label>& tmpl, int ox, int oy) {
  if (ox < 0 || oy < 0 || ox + tmpl.width > frame.width || oy + tmpl.height > frame.height) {
    throw RangeError("template placement outside the frame");
  }
  FrameSums sums(frame);
  return ncc_at(sums, template_runs(tmpl), ox, oy);
}

SupportDetection detect_support(const HuImage& frame, const Mask& air_mask, const PreprocessConfig& cfg) {
  SupportDetection out;
  out.mask = Mask(frame.width, frame.height, 0);
  if (!cfg.support_template) return out;
  const Image<Label>& tmpl = *cfg.support_template;
  if (tmpl.width > frame.width || tmpl.height > frame.height) return out;
  TemplateRuns runs = template_runs(tmpl);
  if (runs.footprint == 0 || runs.footprint == tmpl.width * tmpl.height) return out;

  int min_votes = std::max(3, static_cast<int>(std::floor(0.6 * runs.left_edge_height)));
  auto lines = hough_vertical_lines(air_mask, cfg.hough_tolerance_deg, min_votes);
  const int span = runs.last_col - runs.first_col;
  const int slack = 3;
  // Edge pairs may be up to 1/8 of the span closer or further apart than the template's,
  // so a stretched or compressed support is still found.
  const int pair_slack = std::max(slack, span / 8);

  FrameSums sums(frame);
  double best = -2.0;
  int best_x = 0, best_y = 0;
  std::vector<std::uint8_t> tried(frame.width, 0);
  bool any = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::size_t j = 0; j < lines.size(); ++j) {
      double gap = lines[j].x - lines[i].x;
      if (gap <= 0 || std::abs(gap - span) > pair_slack) continue;
      int left = static_cast<int>(std::lround(lines[i].x)) - runs.first_col;
      int right = static_cast<int>(std::lround(lines[j].x)) - runs.last_col;
      for (int ox = std::min(left, right) - slack; ox <= std::max(left, right) + slack; ++ox) {
        if (ox < 0 || ox + tmpl.width > frame.width || tried[ox]) continue;
        tried[ox] = 1;
        any = true;
        for (int oy = 0; oy + tmpl.height <= frame.height; ++oy) {
          double score = ncc_at(sums, runs, ox, oy);
          if (score > best) {
            best = score;
            best_x = ox;
            best_y = oy;
          }
        }
      }
    }
  }
  if (!any) return out;
  out.score = best;
  if (best < cfg.match_threshold) return out;

  Mask footprint(frame.width, frame.height, 0);
  for (int y = 0; y < tmpl.height; ++y)
    for (int x = 0; x < tmpl.width; ++x) {
      if (tmpl.at(x, y) == Label::Support && !air_mask.at(best_x + x, best_y + y)) footprint.at(best_x + x, best_y + y) = 1;
    }
  // The mask is every non-air component lying mostly under the placed footprint, so a
  // support deformed away from the template shape is still labelled whole.
  std::vector<int> comp(static_cast<std::size_t>(frame.width) * frame.height, -1);
  std::vector<int> stack, members;
  PixelBox box{frame.width, frame.height, -1, -1};
  for (int start = 0; start < static_cast<int>(comp.size()); ++start) {
    if (comp[start] >= 0 || air_mask.pixels[start] || !footprint.pixels[start]) continue;
    members.clear();
    int inside = 0;
    comp[start] = start;
    stack.push_back(start);
    while (!stack.empty()) {
      int idx = stack.back();
      stack.pop_back();
      members.push_back(idx);
      inside += footprint.pixels[idx];
      int x = idx % frame.width, y = idx / frame.width;
      const int nbr[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (auto [nx, ny] : nbr) {
        if (nx < 0 || ny < 0 || nx >= frame.width || ny >= frame.height) continue;
        int n = ny * frame.width + nx;
        if (comp[n] >= 0 || air_mask.pixels[n]) continue;
        comp[n] = start;
        stack.push_back(n);
      }
    }
    if (2 * static_cast<std::size_t>(inside) < members.size()) continue;
    for (int idx : members) {
      out.mask.pixels[idx] = 1;
      int x = idx % frame.width, y = idx / frame.width;
      box.x0 = std::min(box.x0, x);
      box.y0 = std::min(box.y0, y);
      box.x1 = std::max(box.x1, x);
      box.y1 = std::max(box.y1, y);
    }
  }
  if (box.x1 < 0) return out;
  out.box = box;
  return out;
}

std::vector<MetalComponent> detect_metal(const Volume& v, const PreprocessConfig& cfg) {
  const Dims& d = v.dims();
  std::vector<std::uint8_t> visited(d.count(), 0);
  std::vector<MetalComponent> out;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < d.count(); ++start) {
    if (visited[start] || v.data()[start] < cfg.metal_threshold) continue;
    MetalComponent comp;
    visited[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      std::size_t idx = stack.back();
      stack.pop_back();
      comp.voxels.push_back(idx);
      int x = static_cast<int>(idx % d.nx);
      int y = static_cast<int>((idx / d.nx) % d.ny);
      int z = static_cast<int>(idx / d.frame_size());
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            int xx = x + dx, yy = y + dy, zz = z + dz;
            if (!v.contains(xx, yy, zz)) continue;
            std::size_t n = v.index(xx, yy, zz);
            if (visited[n] || v.data()[n] < cfg.metal_threshold) continue;
            visited[n] = 1;
            stack.push_back(n);
          }
    }
    if (static_cast<int>(comp.voxels.size()) < cfg.min_metal_voxels) continue;
    std::sort(comp.voxels.begin(), comp.voxels.end());
    out.push_back(std::move(comp));
  }
  return out;
}

PreprocessResult run_preprocess(const Volume& v, const PreprocessConfig& cfg, Exec exec, const ProgressFn& progress) {
  cfg.validate();
  const Dims& d = v.dims();
  PreprocessResult out;
  out.air_threshold = choose_air_threshold(v, cfg);
  out.labels = LabelVolume(d, v.spacing(), Label::Unknown);
  out.support_boxes.assign(d.nz, std::nullopt);

  ProgressCounter counter(&progress, d.nz + 1);
  for_each_index(exec, d.nz, [&](int z) {
    HuImage frame = v.frame_image(z);
    Mask exterior = segment_exterior_air(frame, out.air_threshold);
    Mask hollow = detect_hollow(frame, out.air_threshold, exterior);
    SupportDetection support = detect_support(frame, exterior, cfg);
    auto labels = out.labels.frame(z);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (support.mask.pixels[i]) {
        labels[i] = Label::Support;
      } else if (exterior.pixels[i]) {
        labels[i] = Label::ExteriorAir;
      } else if (hollow.pixels[i]) {
        labels[i] = Label::Hollow;
      }
    }
    out.support_boxes[z] = support.box;
    counter.tick();
  });

  out.metal = detect_metal(v, cfg);
  for (const auto& comp : out.metal)
    for (std::size_t idx : comp.voxels) out.labels.data()[idx] = Label::Metal;
  counter.tick();
  return out;
}

}  // namespace segd
