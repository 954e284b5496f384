#include "segd/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <tuple>

#include "segd/config.hpp"
#include "segd/error.hpp"

namespace segd {

AdjacencyGraph AdjacencyGraph::from_edges(int num_nodes, std::span<const WeightedEdge> edges) {
  AdjacencyGraph g;
  g.num_nodes = num_nodes;
  g.offsets.assign(num_nodes + 1, 0);
  for (const auto& e : edges) {
    if (e.a < 0 || e.b < 0 || e.a >= num_nodes || e.b >= num_nodes) throw InvalidArgument("edge endpoint out of range");
    if (!(e.weight >= 0)) throw InvalidArgument("edge weights must be non-negative");
    ++g.offsets[e.a + 1];
    ++g.offsets[e.b + 1];
  }
  for (int i = 0; i < num_nodes; ++i) g.offsets[i + 1] += g.offsets[i];
  g.targets.resize(g.offsets.back());
  g.weights.resize(g.offsets.back());
  std::vector<int> fill(g.offsets.begin(), g.offsets.end() - 1);
  for (const auto& e : edges) {
    g.targets[fill[e.a]] = e.b;
    g.weights[fill[e.a]++] = e.weight;
    g.targets[fill[e.b]] = e.a;
    g.weights[fill[e.b]++] = e.weight;
  }
  return g;
}

TopDistances multi_source_top_m(const AdjacencyGraph& g, std::span<const std::uint8_t> is_source, int m) {
  if (m < 1) throw InvalidArgument("m must be at least 1");
  if (static_cast<int>(is_source.size()) != g.num_nodes) throw DimensionMismatch("source mask size mismatch");
  const int n = g.num_nodes;
  TopDistances out;
  out.m = m;
  out.values.assign(static_cast<std::size_t>(n) * m, 0.0);
  out.counts.assign(n, 0);
  std::vector<int> owner(static_cast<std::size_t>(n) * m, -1);

  auto has_source = [&](int node, int source) {
    const int* o = &owner[static_cast<std::size_t>(node) * m];
    return std::find(o, o + out.counts[node], source) != o + out.counts[node];
  };

  using Entry = std::tuple<double, int, int>;  // distance, node, source
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (int s = 0; s < n; ++s)
    if (is_source[s]) heap.emplace(0.0, s, s);

  while (!heap.empty()) {
    auto [dist, node, source] = heap.top();
    heap.pop();
    int& count = out.counts[node];
    if (count == m || has_source(node, source)) continue;
    std::size_t slot = static_cast<std::size_t>(node) * m + count;
    out.values[slot] = dist;
    owner[slot] = source;
    ++count;
    for (int k = g.offsets[node]; k < g.offsets[node + 1]; ++k) {
      int next = g.targets[k];
      if (out.counts[next] == m || has_source(next, source)) continue;
      heap.emplace(dist + g.weights[k], next, source);
    }
  }
  return out;
}

PatchGraph build_patch_graph(const HuImage& frame, const Image<Label>& labels) {
  if (frame.width <= 0 || frame.height <= 0) throw InvalidArgument("empty frame");
  if (labels.width != frame.width || labels.height != frame.height) {
    throw DimensionMismatch("label frame does not match HU frame");
  }
  PatchGraph g;
  g.frame_w = frame.width;
  g.frame_h = frame.height;
  g.grid_w = (frame.width + kPatchSize - 1) / kPatchSize;
  g.grid_h = (frame.height + kPatchSize - 1) / kPatchSize;
  const int n = g.num_patches();
  std::vector<double> sum(n, 0.0);
  std::vector<int> total(n, 0), reference(n, 0), excluded(n, 0);
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      int p = g.patch_of(x, y);
      sum[p] += frame.at(x, y);
      ++total[p];
      Label l = labels.at(x, y);
      if (l == Label::ExteriorAir || l == Label::Support) ++reference[p];
      if (l == Label::Metal || l == Label::Hollow) ++excluded[p];
    }
  }
  g.mean_hu.resize(n);
  g.role.resize(n);
  for (int p = 0; p < n; ++p) {
    g.mean_hu[p] = sum[p] / total[p];
    if (2 * reference[p] >= total[p]) {
      g.role[p] = PatchRole::Reference;
    } else if (2 * excluded[p] >= total[p]) {
      g.role[p] = PatchRole::Excluded;
    } else {
      g.role[p] = PatchRole::Candidate;
    }
  }
  for (int gy = 0; gy < g.grid_h; ++gy) {
    for (int gx = 0; gx < g.grid_w; ++gx) {
      int p = gy * g.grid_w + gx;
      if (g.role[p] == PatchRole::Excluded) continue;
      if (gx + 1 < g.grid_w && g.role[p + 1] != PatchRole::Excluded) {
        g.edges.push_back({p, p + 1, std::abs(g.mean_hu[p] - g.mean_hu[p + 1])});
      }
      if (gy + 1 < g.grid_h && g.role[p + g.grid_w] != PatchRole::Excluded) {
        g.edges.push_back({p, p + g.grid_w, std::abs(g.mean_hu[p] - g.mean_hu[p + g.grid_w])});
      }
    }
  }
  return g;
}

std::optional<GeodesicField> geodesic_multi(const PatchGraph& g, int m) {
  if (m < 1) throw InvalidArgument("m must be at least 1");
  const int n = g.num_patches();
  std::vector<std::uint8_t> is_source(n, 0);
  bool any = false;
  for (int p = 0; p < n; ++p)
    if (g.role[p] == PatchRole::Reference) is_source[p] = any = true;
  if (!any) return std::nullopt;

  GeodesicField field;
  field.m = m;
  field.top = multi_source_top_m(g.adjacency(), is_source, m);
  field.average.assign(n, std::numeric_limits<double>::quiet_NaN());
  for (int p = 0; p < n; ++p) {
    if (g.role[p] != PatchRole::Candidate) continue;
    auto d = field.top.of(p);
    if (d.empty()) {
      field.unreachable.push_back(p);
      continue;
    }
    double s = 0;
    for (double v : d) s += v;
    field.average[p] = s / static_cast<double>(d.size());
    field.candidates.push_back(p);
  }
  field.sorted.reserve(field.candidates.size());
  for (int p : field.candidates) field.sorted.push_back(field.average[p]);
  std::sort(field.sorted.begin(), field.sorted.end());
  return field;
}

namespace {

PatchSplit no_split(const GeodesicField& field) {
  PatchSplit out;
  out.wrap = field.candidates;
  out.body = field.unreachable;
  out.threshold = field.sorted.empty() ? 0.0 : field.sorted.back();
  return out;
}

}  // namespace

PatchSplit split_at(const GeodesicField& field, double threshold) {
  PatchSplit out;
  out.threshold = threshold;
  out.split_index = static_cast<int>(std::upper_bound(field.sorted.begin(), field.sorted.end(), threshold) -
                                     field.sorted.begin());
  for (int p : field.candidates) (field.average[p] <= threshold ? out.wrap : out.body).push_back(p);
  out.body.insert(out.body.end(), field.unreachable.begin(), field.unreachable.end());
  std::sort(out.body.begin(), out.body.end());
  return out;
}

PatchSplit split_by_gradient(const GeodesicField& field) {
  const auto& s = field.sorted;
  int pos = -1;
  double best = 0.0;
  for (int i = 0; i + 1 < static_cast<int>(s.size()); ++i) {
    double diff = s[i + 1] - s[i];
    if (diff > 0 && diff >= best) {
      best = diff;
      pos = i;
    }
  }
  return pos < 0 ? no_split(field) : split_at(field, s[pos]);
}

PatchSplit split_by_variance(const GeodesicField& field, double min_contrast) {
  const auto& s = field.sorted;
  const int n = static_cast<int>(s.size());
  if (n < 2) return no_split(field);
  std::vector<double> prefix(n + 1, 0.0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + s[i];
  int best_k = 0;
  double best = -1.0, contrast = 0.0;
  for (int k = 1; k < n; ++k) {
    if (!(s[k] > s[k - 1])) continue;
    double mean_lo = prefix[k] / k;
    double mean_hi = (prefix[n] - prefix[k]) / (n - k);
    double between = static_cast<double>(k) * (n - k) * (mean_hi - mean_lo) * (mean_hi - mean_lo);
    if (between >= best) {
      best = between;
      best_k = k;
      contrast = mean_hi - mean_lo;
    }
  }
  if (best_k == 0 || contrast < min_contrast) return no_split(field);
  return split_at(field, s[best_k - 1]);
}

PatchSplit split_by_median(const GeodesicField& field, double min_contrast) {
  const auto& s = field.sorted;
  const int n = static_cast<int>(s.size());
  if (n < 2) return no_split(field);
  std::vector<double> prefix(n + 1, 0.0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + s[i];
  // Sum of absolute deviations of s[a, b) from its upper median.
  auto cost = [&](int a, int b) {
    int m = (a + b) / 2;
    return s[m] * (m - a) - (prefix[m] - prefix[a]) + (prefix[b] - prefix[m]) - s[m] * (b - m);
  };
  auto median = [&](int a, int b) { return s[(a + b) / 2]; };
  // Class boundaries only between distinct values; ties go to the later boundary.
  int b1 = 0, b2 = 0, two_class = 0;
  double best3 = std::numeric_limits<double>::infinity();
  double best2 = best3;
  for (int i = 1; i < n; ++i) {
    if (!(s[i] > s[i - 1])) continue;
    double head = cost(0, i);
    if (head + cost(i, n) <= best2) {
      best2 = head + cost(i, n);
      two_class = i;
    }
    for (int j = i + 1; j < n; ++j) {
      if (!(s[j] > s[j - 1])) continue;
      double c = head + cost(i, j) + cost(j, n);
      if (c <= best3) {
        best3 = c;
        b1 = i;
        b2 = j;
      }
    }
  }
  if (b1 == 0) {
    if (two_class == 0 || median(two_class, n) - median(0, two_class) < min_contrast) return no_split(field);
    return split_at(field, s[two_class - 1]);
  }
  if (median(b1, b2) - median(0, b1) >= min_contrast) return split_at(field, s[b1 - 1]);
  if (median(b2, n) - median(b1, b2) >= min_contrast) return split_at(field, s[b2 - 1]);
  return no_split(field);
}

SplitRule parse_split_rule(std::string_view name) {
  if (name == "gradient") return SplitRule::Gradient;
  if (name == "variance") return SplitRule::Variance;
  if (name == "median") return SplitRule::Median;
  throw InvalidArgument("unknown split rule '" + std::string(name) + "'");
}

void GeodesicConfig::apply(const KeyValues& kv) {
  kv.read("m", m);
  std::string rule_name;
  kv.read("split_rule", rule_name);
  if (!rule_name.empty()) rule = parse_split_rule(rule_name);
  kv.read("split_min_contrast", min_contrast);
}

void GeodesicConfig::validate() const {
  if (m < 1) throw InvalidArgument("m must be at least 1");
  if (min_contrast < 0) throw InvalidArgument("split_min_contrast must be non-negative");
}

PatchSplit split_field(const GeodesicField& field, const GeodesicConfig& cfg) {
  switch (cfg.rule) {
    case SplitRule::Gradient:
      return split_by_gradient(field);
    case SplitRule::Variance:
      return split_by_variance(field, cfg.min_contrast);
    case SplitRule::Median:
      break;
  }
  return split_by_median(field, cfg.min_contrast);
}

FrameGeodesic geodesic_frame(const HuImage& frame, const Image<Label>& labels, const GeodesicConfig& cfg) {
  FrameGeodesic out;
  out.graph = build_patch_graph(frame, labels);
  out.field = geodesic_multi(out.graph, cfg.m);
  if (out.field) out.split = split_field(*out.field, cfg);
  return out;
}

LabelVolume geodesic_stage(const Volume& v, const LabelVolume& labels, const GeodesicConfig& cfg, Exec exec,
                           const ProgressFn& progress) {
  cfg.validate();
  if (v.dims() != labels.dims()) throw DimensionMismatch("label volume does not match the scan");
  LabelVolume out = labels;
  const Dims& d = v.dims();
  ProgressCounter counter(&progress, d.nz);
  for_each_index(exec, d.nz, [&](int z) {
    FrameGeodesic fg = geodesic_frame(v.frame_image(z), labels.frame_image(z), cfg);
    std::vector<std::uint8_t> is_body(fg.graph.num_patches(), 0);
    if (fg.field) {
      for (int p : fg.split.body) is_body[p] = 1;
    }
    auto f = out.frame(z);
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        Label& l = f[static_cast<std::size_t>(y) * d.nx + x];
        if (l != Label::Unknown) continue;
        int p = fg.graph.patch_of(x, y);
        l = is_body[p] && fg.graph.role[p] == PatchRole::Candidate ? Label::Body : Label::Bandage;
      }
    counter.tick();
  });
  return out;
}

RgbImage geodesic_heatmap(const FrameGeodesic& result) {
  const PatchGraph& g = result.graph;
  RgbImage img(g.frame_w, g.frame_h, Rgb{0, 0, 0});
  if (!result.field || result.field->sorted.empty()) return img;
  double lo = result.field->sorted.front(), hi = result.field->sorted.back();
  double span = hi > lo ? hi - lo : 1.0;
  for (int y = 0; y < g.frame_h; ++y)
    for (int x = 0; x < g.frame_w; ++x) {
      int p = g.patch_of(x, y);
      double a = result.field->average[p];
      if (g.role[p] != PatchRole::Candidate || std::isnan(a)) continue;
      double t = std::clamp((a - lo) / span, 0.0, 1.0);
      // blue -> green -> red
      double r = std::clamp(2 * t - 1, 0.0, 1.0), b = std::clamp(1 - 2 * t, 0.0, 1.0), gr = 1 - r - b;
      img.at(x, y) = {static_cast<std::uint8_t>(255 * r), static_cast<std::uint8_t>(255 * gr),
                      static_cast<std::uint8_t>(255 * b)};
    }
  return img;
}

}  // namespace segd
