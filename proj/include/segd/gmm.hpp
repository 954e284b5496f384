#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "segd/volume.hpp"

namespace segd {

// One-dimensional Gaussian mixture over HU.
struct Gmm1D {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> variances;

  int size() const { return static_cast<int>(weights.size()); }
  double log_density(double x) const;
  double neg_log_density(double x) const { return -log_density(x); }
};

struct GmmOptions {
  int k = 5;
  int em_iterations = 10;
  double variance_floor = 1.0;
  std::uint64_t seed = 0;
};

struct GmmFit {
  Gmm1D model;
  // Total log-likelihood before the first EM step and after each step.
  std::vector<double> log_likelihood;
};

// Fits distinct values with multiplicities. The result equals fitting the expanded
// sample list, at a cost that depends only on the number of distinct values.
// k is reduced to the number of distinct values when there are fewer.
GmmFit fit_gmm(std::span<const double> values, std::span<const double> counts, const GmmOptions& opt);

// Same fit from raw HU samples.
GmmFit fit_gmm(std::span<const Hu> samples, const GmmOptions& opt);

// Counts indexed by HU - kMinHu; a compact form of a sample multiset.
struct HuCounts {
  std::vector<double> counts = std::vector<double>(static_cast<std::size_t>(kMaxHu - kMinHu + 1), 0.0);

  void add(Hu v, double n = 1.0) { counts[static_cast<std::size_t>(v - kMinHu)] += n; }
  double total() const;
};

GmmFit fit_gmm(const HuCounts& counts, const GmmOptions& opt);

// splitmix64 step, used to derive independent seeds from one config seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace segd
