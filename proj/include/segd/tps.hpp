#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segd/exec.hpp"
#include "segd/volume.hpp"

namespace segd {

// U(r) written in terms of r^2: r^2 log r^2, with U(0) = 0.
double tps_kernel(double r2);

// Interpolating thin-plate spline from `source` to `target` points.
// Output coordinate c is affine[c][0] + affine[c][1] x + affine[c][2] y + sum_i w[c][i] U(|p - X_i|).
struct WarpFunction {
  std::vector<Point2> source;
  std::vector<Point2> target;
  std::array<std::array<double, 3>, 2> affine{};
  std::array<std::vector<double>, 2> weights;

  Point2 operator()(Point2 p) const;
  // Spline fitted on the swapped correspondences.
  WarpFunction inverse() const;
};

// Throws SingularError for fewer than 3 points, duplicates, or collinear points.
WarpFunction fit_tps(std::span<const Point2> source, std::span<const Point2> target);

// Inverse mapping: each output pixel samples the input at f^-1(pixel).
// HU frames are interpolated bilinearly with -1000 fill; labels use nearest neighbour with EXTERIOR_AIR fill.
HuImage warp_frame(const HuImage& frame, const WarpFunction& f);
Image<Label> warp_frame(const Image<Label>& frame, const WarpFunction& f);
Mask warp_frame(const Mask& frame, const WarpFunction& f);

// Per-frame f_k fitted from X^(k-1) to X^(k), X^(k) = X^(0) + k (X^(N) - X^(0)) / N, k = 1..N.
std::vector<WarpFunction> incremental_warps(std::span<const Point2> first, std::span<const Point2> last, int n);

// 0-based indices into f_1..f_N giving the frame order of set 1..4.
// Sets 3 and 4 require even n.
std::vector<int> warp_set_order(int set_id, int n);

struct WarpSet {
  int id = 1;
  std::vector<WarpFunction> functions;  // one per frame
};

WarpSet make_warp_set(std::span<const Point2> first, std::span<const Point2> last, int n, int set_id);
// All four sets; throws for odd n.
std::array<WarpSet, 4> make_warp_sets(std::span<const Point2> first, std::span<const Point2> last, int n);

struct WarpedVolume {
  Volume volume;
  LabelVolume labels;
};

// `warps` holds either one function for every frame or exactly one per frame.
Volume warp_volume(const Volume& v, std::span<const WarpFunction> warps, Exec exec = Exec::Parallel);
LabelVolume warp_volume(const LabelVolume& labels, std::span<const WarpFunction> warps,
                        Exec exec = Exec::Parallel);
WarpedVolume warp_volume(const Volume& v, const LabelVolume& labels, std::span<const WarpFunction> warps,
                         Exec exec = Exec::Parallel);

// Correspondences read from lines "x,y,x',y'".
struct ControlPoints {
  std::vector<Point2> source;
  std::vector<Point2> target;
};

ControlPoints parse_control_points(std::string_view text);
ControlPoints load_control_points(const std::filesystem::path& path);
std::string format_control_points(const ControlPoints& cp);

// Cell centres of a 3 x 4 tiling of the frame, each moved by a random offset of
// length at most `max_shift` in a random direction, drawn from `seed`.
ControlPoints default_control_points(int width, int height, std::uint64_t seed, double max_shift = 8.0);

// "single" or "1".."4".
std::optional<int> parse_warp_set(std::string_view name);

}  // namespace segd
