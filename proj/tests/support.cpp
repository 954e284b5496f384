#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iterator>
#include <limits>

#include <unistd.h>

namespace segd::testing {

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("segd_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

PhantomSpec small_spec(std::uint64_t seed) {
  PhantomSpec spec;
  spec.seed = seed;
  spec.dims = Dims{96, 96, 36};
  spec.shell_min = 4;
  spec.shell_max = 6;
  spec.metal_radius = 2;
  return spec;
}

double class_iou(const LabelVolume& pred, const LabelVolume& gt, Label label) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < gt.data().size(); ++i) {
    bool a = pred.data()[i] == label, b = gt.data()[i] == label;
    inter += a && b;
    uni += a || b;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

RandomGridGraph random_grid_graph(std::mt19937_64& rng, int max_nodes, int max_weight) {
  RandomGridGraph g;
  std::uniform_int_distribution<int> side(1, max_nodes);
  do {
    g.w = side(rng);
    g.h = side(rng);
  } while (g.w * g.h > max_nodes || g.w * g.h < 2);
  std::uniform_int_distribution<int> weight(0, max_weight);
  std::bernoulli_distribution keep(0.85);
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) {
      int v = y * g.w + x;
      if (x + 1 < g.w && keep(rng)) g.edges.push_back({v, v + 1, static_cast<double>(weight(rng))});
      if (y + 1 < g.h && keep(rng)) g.edges.push_back({v, v + g.w, static_cast<double>(weight(rng))});
    }
  std::bernoulli_distribution source(0.3);
  g.is_source.resize(g.num_nodes());
  for (auto& s : g.is_source) s = source(rng);
  if (std::none_of(g.is_source.begin(), g.is_source.end(), [](std::uint8_t s) { return s; })) {
    g.is_source[std::uniform_int_distribution<int>(0, g.num_nodes() - 1)(rng)] = 1;
  }
  return g;
}

std::vector<std::vector<double>> brute_top_m(const RandomGridGraph& g, int m) {
  const int n = g.num_nodes();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d(static_cast<std::size_t>(n) * n, inf);
  for (int i = 0; i < n; ++i) d[i * n + i] = 0.0;
  for (const auto& e : g.edges) {
    d[e.a * n + e.b] = std::min(d[e.a * n + e.b], e.weight);
    d[e.b * n + e.a] = std::min(d[e.b * n + e.a], e.weight);
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d[i * n + j] = std::min(d[i * n + j], d[i * n + k] + d[k * n + j]);
  std::vector<std::vector<double>> out(n);
  for (int v = 0; v < n; ++v) {
    for (int s = 0; s < n; ++s)
      if (g.is_source[s] && d[v * n + s] < inf) out[v].push_back(d[v * n + s]);
    std::sort(out[v].begin(), out[v].end());
    if (static_cast<int>(out[v].size()) > m) out[v].resize(m);
  }
  return out;
}

RandomCutGraph random_cut_graph(std::mt19937_64& rng, int max_nodes, int max_cap) {
  RandomCutGraph g;
  g.n = std::uniform_int_distribution<int>(1, max_nodes)(rng);
  std::uniform_int_distribution<int> cap(0, max_cap);
  std::bernoulli_distribution zero(0.3);
  auto draw = [&] { return zero(rng) ? 0.0 : static_cast<double>(cap(rng)); };
  g.cap_source.resize(g.n);
  g.cap_sink.resize(g.n);
  for (int v = 0; v < g.n; ++v) {
    g.cap_source[v] = draw();
    g.cap_sink[v] = draw();
  }
  std::bernoulli_distribution present(0.4);
  for (int a = 0; a < g.n; ++a)
    for (int b = a + 1; b < g.n; ++b)
      if (present(rng)) g.edges.push_back({a, b, draw(), draw()});
  return g;
}

double cut_value(const RandomCutGraph& g, const std::vector<std::uint8_t>& src) {
  double c = 0.0;
  for (int v = 0; v < g.n; ++v) c += src[v] ? g.cap_sink[v] : g.cap_source[v];
  for (const auto& e : g.edges) {
    if (src[e.a] && !src[e.b]) c += e.ab;
    if (src[e.b] && !src[e.a]) c += e.ba;
  }
  return c;
}

double brute_min_cut(const RandomCutGraph& g) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> src(g.n);
  for (std::uint32_t mask = 0; mask < (1u << g.n); ++mask) {
    for (int v = 0; v < g.n; ++v) src[v] = (mask >> v) & 1u;
    best = std::min(best, cut_value(g, src));
  }
  return best;
}

PatchGraph as_patch_graph(const RandomGridGraph& r) {
  PatchGraph g;
  g.grid_w = r.w;
  g.grid_h = r.h;
  g.frame_w = r.w * kPatchSize;
  g.frame_h = r.h * kPatchSize;
  g.mean_hu.assign(r.num_nodes(), 0.0);
  for (int v = 0; v < r.num_nodes(); ++v) g.role.push_back(r.is_source[v] ? PatchRole::Reference : PatchRole::Candidate);
  g.edges = r.edges;
  return g;
}

}  // namespace segd::testing
