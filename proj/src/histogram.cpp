#include "segd/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "segd/error.hpp"

namespace segd {

template <class T>
Histogram make_histogram(std::span<const T> values, double bin_width, int smoothing_bins) {
  if (!(bin_width > 0)) throw InvalidArgument("histogram bin width must be positive");
  if (smoothing_bins < 1) throw InvalidArgument("smoothing window must be at least one bin");
  Histogram h;
  h.bin_width = bin_width;
  if (values.empty()) return h;
  auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  long lo = static_cast<long>(std::floor(*mn / bin_width));
  long hi = static_cast<long>(std::floor(*mx / bin_width));
  h.origin = lo * bin_width;
  h.counts.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
  for (T x : values) h.counts[static_cast<std::size_t>(static_cast<long>(std::floor(x / bin_width)) - lo)] += 1;
  const int n = static_cast<int>(h.counts.size());
  const int half = smoothing_bins / 2;
  h.smoothed.assign(h.counts.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int j = i - half; j < i - half + smoothing_bins; ++j)
      if (j >= 0 && j < n) s += h.counts[j];
    h.smoothed[i] = s / smoothing_bins;
  }
  return h;
}

template Histogram make_histogram<std::int16_t>(std::span<const std::int16_t>, double, int);
template Histogram make_histogram<double>(std::span<const double>, double, int);

std::vector<int> histogram_peaks(const Histogram& h) {
  const auto& s = h.smoothed;
  const int n = static_cast<int>(s.size());
  std::vector<int> peaks;
  for (int i = 0; i < n; ++i) {
    double left = i > 0 ? s[i - 1] : 0.0;
    double right = i + 1 < n ? s[i + 1] : 0.0;
    if (s[i] > 0 && s[i] > left && s[i] >= right) peaks.push_back(i);
  }
  std::stable_sort(peaks.begin(), peaks.end(), [&](int a, int b) { return s[a] > s[b]; });
  return peaks;
}

std::optional<double> valley_between_peaks(const Histogram& h) {
  std::vector<int> peaks = histogram_peaks(h);
  if (peaks.size() < 2) return std::nullopt;
  const auto& s = h.smoothed;
  // Two peaks are never adjacent, so the open interval is non-empty.
  int p1 = std::min(peaks[0], peaks[1]);
  int p2 = std::max(peaks[0], peaks[1]);
  double best = s[p1 + 1];
  for (int i = p1 + 1; i < p2; ++i) best = std::min(best, s[i]);
  int run_lo = p1 + 1;
  while (s[run_lo] != best) ++run_lo;
  int run_hi = run_lo;
  while (run_hi + 1 < p2 && s[run_hi + 1] == best) ++run_hi;
  return h.origin + h.bin_width * (run_lo + run_hi + 1) / 2.0;
}

}  // namespace segd
