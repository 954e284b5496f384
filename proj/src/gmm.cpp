#include "segd/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "segd/error.hpp"

namespace segd {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))

double component_log(const Gmm1D& g, int c, double x) {
  double d = x - g.means[c];
  return std::log(g.weights[c]) - kLogSqrt2Pi - 0.5 * std::log(g.variances[c]) - 0.5 * d * d / g.variances[c];
}

// Uniform double in [0, 1) with 53 random bits.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Weighted draw proportional to w; falls back to the last positive entry on rounding.
std::size_t draw(std::span<const double> w, double total, std::mt19937_64& rng) {
  double target = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0) continue;
    acc += w[i];
    last = i;
    if (target < acc) return i;
  }
  return last;
}

}  // namespace

double Gmm1D::log_density(double x) const {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(weights.size());
  for (int c = 0; c < size(); ++c) {
    terms[c] = weights[c] > 0 ? component_log(*this, c, x) : -std::numeric_limits<double>::infinity();
    best = std::max(best, terms[c]);
  }
  if (std::isinf(best)) return best;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - best);
  return best + std::log(s);
}

double HuCounts::total() const {
  double s = 0.0;
  for (double c : counts) s += c;
  return s;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

GmmFit fit_gmm(std::span<const double> values, std::span<const double> counts, const GmmOptions& opt) {
  if (values.size() != counts.size()) throw DimensionMismatch("values and counts differ in length");
  if (opt.k < 1) throw InvalidArgument("GMM needs at least one component");
  if (!(opt.variance_floor > 0)) throw InvalidArgument("variance floor must be positive");
  if (opt.em_iterations < 0) throw InvalidArgument("negative EM iteration count");
  std::vector<double> x, n;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (counts[i] < 0) throw InvalidArgument("negative sample count");
    if (counts[i] > 0) {
      x.push_back(values[i]);
      n.push_back(counts[i]);
    }
  }
  if (x.empty()) throw InvalidArgument("GMM fit needs at least one sample");
  const std::size_t m = x.size();
  double total = 0.0;
  for (double c : n) total += c;
  const int k = static_cast<int>(std::min<std::size_t>(opt.k, m));

  // k-means++ seeding over the weighted distinct values.
  std::mt19937_64 rng(opt.seed);
  std::vector<double> centers;
  centers.push_back(x[draw(n, total, rng)]);
  std::vector<double> d2(m, std::numeric_limits<double>::infinity());
  std::vector<double> w(m);
  while (static_cast<int>(centers.size()) < k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double d = x[i] - centers.back();
      d2[i] = std::min(d2[i], d * d);
      w[i] = n[i] * d2[i];
      sum += w[i];
    }
    centers.push_back(x[draw(w, sum, rng)]);
  }

  GmmFit fit;
  Gmm1D& g = fit.model;
  g.weights.assign(k, 0.0);
  g.means.assign(k, 0.0);
  g.variances.assign(k, 0.0);
  std::vector<double> sq(k, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    int best = 0;
    for (int c = 1; c < k; ++c)
      if (std::abs(x[i] - centers[c]) < std::abs(x[i] - centers[best])) best = c;
    g.weights[best] += n[i];
    g.means[best] += n[i] * x[i];
    sq[best] += n[i] * x[i] * x[i];
  }
  for (int c = 0; c < k; ++c) {
    double nc = g.weights[c];
    double mean = g.means[c] / nc;
    g.means[c] = mean;
    g.variances[c] = std::max(sq[c] / nc - mean * mean, opt.variance_floor);
    g.weights[c] = nc / total;
  }

  std::vector<double> resp(m * k);
  auto e_step = [&]() {
    double ll = 0.0;
    std::vector<double> t(k);
    for (std::size_t i = 0; i < m; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        t[c] = g.weights[c] > 0 ? component_log(g, c, x[i]) : -std::numeric_limits<double>::infinity();
        best = std::max(best, t[c]);
      }
      double s = 0.0;
      for (int c = 0; c < k; ++c) s += std::exp(t[c] - best);
      double lse = best + std::log(s);
      for (int c = 0; c < k; ++c) resp[i * k + c] = std::exp(t[c] - lse);
      ll += n[i] * lse;
    }
    return ll;
  };

  fit.log_likelihood.push_back(e_step());
  for (int it = 0; it < opt.em_iterations; ++it) {
    for (int c = 0; c < k; ++c) {
      double nc = 0.0, s1 = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double r = n[i] * resp[i * k + c];
        nc += r;
        s1 += r * x[i];
      }
      if (nc <= 0) {
        g.weights[c] = 0.0;
        continue;
      }
      double mean = s1 / nc;
      double s2 = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double d = x[i] - mean;
        s2 += n[i] * resp[i * k + c] * d * d;
      }
      g.weights[c] = nc / total;
      g.means[c] = mean;
      g.variances[c] = std::max(s2 / nc, opt.variance_floor);
    }
    fit.log_likelihood.push_back(e_step());
  }
  return fit;
}

GmmFit fit_gmm(std::span<const Hu> samples, const GmmOptions& opt) {
  std::map<Hu, double> hist;
  for (Hu s : samples) hist[s] += 1.0;
  std::vector<double> values, counts;
  for (auto [v, c] : hist) {
    values.push_back(v);
    counts.push_back(c);
  }
  return fit_gmm(values, counts, opt);
}

GmmFit fit_gmm(const HuCounts& hc, const GmmOptions& opt) {
  std::vector<double> values, counts;
  for (std::size_t i = 0; i < hc.counts.size(); ++i) {
    if (hc.counts[i] > 0) {
      values.push_back(static_cast<double>(static_cast<int>(i) + kMinHu));
      counts.push_back(hc.counts[i]);
    }
  }
  return fit_gmm(values, counts, opt);
}

}  // namespace segd
