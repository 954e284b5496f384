#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "segd/exec.hpp"
#include "segd/histogram.hpp"
#include "segd/phantom.hpp"
#include "segd/volume.hpp"

namespace segd {

class KeyValues;

struct PreprocessConfig {
  double bin_width = 10.0;             // HU per histogram bin
  int smoothing_bins = 5;              // centered moving-average window
  double fallback_air_threshold = -500.0;
  int metal_threshold = 2500;
  double match_threshold = 0.6;        // minimum NCC to accept a support match
  double hough_tolerance_deg = 5.0;    // |line angle - 90 deg| accepted as vertical
  int min_metal_voxels = 4;
  std::optional<Image<Label>> support_template;

  void apply(const KeyValues& kv);
  void validate() const;
};

Histogram air_histogram(const Volume& v, const PreprocessConfig& cfg);

// HU at the deepest smoothed-histogram valley between the two tallest peaks,
// or the configured fallback when fewer than two peaks exist.
double choose_air_threshold(const Volume& v, const PreprocessConfig& cfg);

// 4-connected components of sub-threshold pixels that touch the frame border.
Mask segment_exterior_air(const HuImage& frame, double threshold);

struct SupportDetection {
  Mask mask;
  std::optional<PixelBox> box;
  double score = 0.0;  // best NCC found, 0 if no search window
};

struct VerticalLine {
  double x = 0.0;  // column at the frame's vertical center
  double angle_deg = 90.0;
  int votes = 0;
};

// Near-vertical line peaks on the boundary between `air_mask` and everything else.
std::vector<VerticalLine> hough_vertical_lines(const Mask& air_mask, double tolerance_deg, int min_votes);

// Normalized cross-correlation of a binary template placed with its top-left at (ox, oy).
double template_ncc(const HuImage& frame, const Image<Label>& tmpl, int ox, int oy);

SupportDetection detect_support(const HuImage& frame, const Mask& air_mask, const PreprocessConfig& cfg);

struct MetalComponent {
  std::vector<std::size_t> voxels;  // sorted linear indices
};

// 26-connected components of voxels at or above the metal threshold, small ones dropped.
std::vector<MetalComponent> detect_metal(const Volume& v, const PreprocessConfig& cfg);

// Sub-threshold pixels outside the exterior mask.
Mask detect_hollow(const HuImage& frame, double air_threshold, const Mask& exterior);

struct PreprocessResult {
  LabelVolume labels;  // EXTERIOR_AIR, SUPPORT, METAL, HOLLOW, rest UNKNOWN
  double air_threshold = 0.0;
  std::vector<std::optional<PixelBox>> support_boxes;
  std::vector<MetalComponent> metal;
};

PreprocessResult run_preprocess(const Volume& v, const PreprocessConfig& cfg, Exec exec = Exec::Parallel,
                                const ProgressFn& progress = {});

}  // namespace segd
