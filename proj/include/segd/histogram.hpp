#pragma once

#include <optional>
#include <span>
#include <vector>

namespace segd {

// Fixed-width histogram with absolute bins floor(value / bin_width) and a
// centered, zero-padded moving average.
struct Histogram {
  double origin = 0.0;  // value at the lower edge of bin 0
  double bin_width = 1.0;
  std::vector<double> counts;
  std::vector<double> smoothed;
};

template <class T>
Histogram make_histogram(std::span<const T> values, double bin_width, int smoothing_bins);

// Indices of local maxima of the smoothed counts, tallest first (stable on ties).
std::vector<int> histogram_peaks(const Histogram& h);

// Value at the deepest smoothed valley between the two tallest peaks; on a flat
// floor the middle of the first minimal run. nullopt with fewer than two peaks.
std::optional<double> valley_between_peaks(const Histogram& h);

}  // namespace segd
