#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "segd/geodesic.hpp"
#include "segd/phantom.hpp"

namespace segd::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& path);

// Same body layout at 96 x 96 x 36, fast enough for unit tests.
PhantomSpec small_spec(std::uint64_t seed = 1);

// Whole-volume IOU of one class.
double class_iou(const LabelVolume& pred, const LabelVolume& gt, Label label);

// ---- geodesic oracle ----

struct RandomGridGraph {
  int w = 0, h = 0;
  std::vector<WeightedEdge> edges;
  std::vector<std::uint8_t> is_source;
  int num_nodes() const { return w * h; }
};

// w x h grid (w * h <= max_nodes), 4-neighbour edges each kept with probability 0.85,
// integer weights in [0, max_weight], at least one source.
RandomGridGraph random_grid_graph(std::mt19937_64& rng, int max_nodes, int max_weight);

// Per node, the m smallest distances to distinct sources, from Floyd-Warshall.
std::vector<std::vector<double>> brute_top_m(const RandomGridGraph& g, int m);

// Patch graph with one patch per node; sources become reference patches.
PatchGraph as_patch_graph(const RandomGridGraph& r);

// ---- min-cut oracle ----

struct CutEdge {
  int a = 0, b = 0;
  double ab = 0.0, ba = 0.0;
};

struct RandomCutGraph {
  int n = 0;
  std::vector<double> cap_source, cap_sink;
  std::vector<CutEdge> edges;
};

RandomCutGraph random_cut_graph(std::mt19937_64& rng, int max_nodes, int max_cap);

// Minimum over all 2^n source/sink assignments of the cut capacity.
double brute_min_cut(const RandomCutGraph& g);

// Cut capacity of a given assignment (1 = source side).
double cut_value(const RandomCutGraph& g, const std::vector<std::uint8_t>& source_side);

}  // namespace segd::testing
