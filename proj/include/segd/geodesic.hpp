#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "segd/exec.hpp"
#include "segd/slice.hpp"
#include "segd/volume.hpp"

namespace segd {

class KeyValues;

struct WeightedEdge {
  int a = 0;
  int b = 0;
  double weight = 0.0;
};

// Undirected weighted graph in compressed adjacency form.
struct AdjacencyGraph {
  int num_nodes = 0;
  std::vector<int> offsets;  // num_nodes + 1
  std::vector<int> targets;
  std::vector<double> weights;

  static AdjacencyGraph from_edges(int num_nodes, std::span<const WeightedEdge> edges);
};

// Up to m smallest shortest-path distances from distinct sources, per node, ascending.
struct TopDistances {
  int m = 0;
  std::vector<double> values;  // num_nodes * m, row per node
  std::vector<int> counts;

  std::span<const double> of(int node) const {
    return {values.data() + static_cast<std::size_t>(node) * m, static_cast<std::size_t>(counts[node])};
  }
};

// Multi-label Dijkstra: every node keeps the first m distinct sources that reach it.
TopDistances multi_source_top_m(const AdjacencyGraph& g, std::span<const std::uint8_t> is_source, int m);

enum class PatchRole : std::uint8_t { Reference, Candidate, Excluded };

inline constexpr int kPatchSize = 3;

struct PatchGraph {
  int grid_w = 0, grid_h = 0;
  int frame_w = 0, frame_h = 0;
  std::vector<double> mean_hu;
  std::vector<PatchRole> role;
  std::vector<WeightedEdge> edges;  // 4-neighborhood among non-excluded patches

  int num_patches() const { return grid_w * grid_h; }
  int patch_of(int x, int y) const { return (y / kPatchSize) * grid_w + x / kPatchSize; }
  AdjacencyGraph adjacency() const { return AdjacencyGraph::from_edges(num_patches(), edges); }
};

// 3x3 tiling (remainder patches on the right/bottom may be smaller). A patch is a
// reference if at least half its pixels are EXTERIOR_AIR/SUPPORT, excluded if at
// least half are METAL/HOLLOW, otherwise a bandage-or-body candidate.
PatchGraph build_patch_graph(const HuImage& frame, const Image<Label>& labels);

struct GeodesicField {
  int m = 0;
  TopDistances top;
  std::vector<double> average;  // per patch; meaningful for reachable candidates
  std::vector<int> candidates;  // reachable candidate patches
  std::vector<int> unreachable; // candidates no reference patch can reach
  std::vector<double> sorted;   // averages of `candidates`, ascending
};

// nullopt when the frame has no reference patch.
std::optional<GeodesicField> geodesic_multi(const PatchGraph& g, int m);

struct PatchSplit {
  std::vector<int> wrap;   // R_w patches
  std::vector<int> body;   // R_b patches
  int split_index = 0;     // number of sorted averages in R_w; 0 if no split
  double threshold = 0.0;  // averages <= threshold go to R_w
};

// Largest forward difference of the sorted averages; ties go to the larger index.
PatchSplit split_by_gradient(const GeodesicField& field);

// Split maximizing between-class variance of the sorted averages; no split when the
// class means differ by less than `min_contrast`.
PatchSplit split_by_variance(const GeodesicField& field, double min_contrast);

// Three-class L1 clustering of the sorted averages (wrap, soft tissue, dense tail
// such as bone or tissue enclosed by bone). R_w is the lowest class if its median is
// at least `min_contrast` below the middle class's median, otherwise the lower two
// classes if the top class clears the same gate. Fewer than three distinct values
// fall back to a two-class split. No split when no boundary clears the gate.
PatchSplit split_by_median(const GeodesicField& field, double min_contrast);

// Averages <= threshold go to R_w, the rest (and unreachable candidates) to R_b.
PatchSplit split_at(const GeodesicField& field, double threshold);

enum class SplitRule { Gradient, Variance, Median };
SplitRule parse_split_rule(std::string_view name);

struct GeodesicConfig {
  int m = 10;
  SplitRule rule = SplitRule::Median;
  double min_contrast = 150.0;

  void apply(const KeyValues& kv);
  void validate() const;
};

PatchSplit split_field(const GeodesicField& field, const GeodesicConfig& cfg);

struct FrameGeodesic {
  PatchGraph graph;
  std::optional<GeodesicField> field;
  PatchSplit split;
};

FrameGeodesic geodesic_frame(const HuImage& frame, const Image<Label>& labels, const GeodesicConfig& cfg);

// Per-frame stage. UNKNOWN pixels become BANDAGE or BODY; other labels are kept.
LabelVolume geodesic_stage(const Volume& v, const LabelVolume& labels, const GeodesicConfig& cfg,
                           Exec exec = Exec::Parallel, const ProgressFn& progress = {});

// Average-distance heat map of one frame (black for non-candidate patches).
RgbImage geodesic_heatmap(const FrameGeodesic& result);

}  // namespace segd
