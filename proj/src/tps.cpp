#include "segd/tps.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "segd/error.hpp"
#include "text_records.hpp"

namespace segd {

using namespace detail;

namespace {

// Dense LU with partial pivoting; solves for every right-hand side column in `rhs`.
// Returns false when a pivot vanishes relative to the matrix scale.
bool lu_solve(std::vector<double> a, int n, std::vector<std::vector<double>>& rhs) {
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return false;
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i) {
      if (std::abs(a[i * n + k]) > std::abs(a[piv * n + k])) piv = i;
    }
    if (std::abs(a[piv * n + k]) <= 1e-13 * scale) return false;
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(a[k * n + j], a[piv * n + j]);
      std::swap(perm[k], perm[piv]);
    }
    for (int i = k + 1; i < n; ++i) {
      double f = a[i * n + k] /= a[k * n + k];
      if (f == 0.0) continue;
      for (int j = k + 1; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
    }
  }
  for (auto& b : rhs) {
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) {
      double s = b[perm[i]];
      for (int j = 0; j < i; ++j) s -= a[i * n + j] * x[j];
      x[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
      double s = x[i];
      for (int j = i + 1; j < n; ++j) s -= a[i * n + j] * x[j];
      x[i] = s / a[i * n + i];
    }
    b = std::move(x);
  }
  return true;
}

void check_points(std::span<const Point2> p) {
  if (p.size() < 3) throw SingularError("thin-plate spline needs at least 3 control points");
  double extent = 0.0;
  for (const auto& q : p) {
    if (!std::isfinite(q.x) || !std::isfinite(q.y)) throw InvalidArgument("control point is not finite");
    extent = std::max({extent, std::abs(q.x - p[0].x), std::abs(q.y - p[0].y)});
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      if (p[i] == p[j]) throw SingularError("duplicate control point");
    }
  }
  double best = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      double cross = (p[i].x - p[0].x) * (p[j].y - p[0].y) - (p[i].y - p[0].y) * (p[j].x - p[0].x);
      best = std::max(best, std::abs(cross));
    }
  }
  if (best <= 1e-12 * extent * extent) throw SingularError("control points are collinear");
}

double snap(double v) {
  double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

// Source coordinate sampled by every output pixel.
std::vector<Point2> sample_map(int width, int height, const WarpFunction& f) {
  WarpFunction inv = f.inverse();
  std::vector<Point2> map(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      Point2 s = inv(Point2{static_cast<double>(x), static_cast<double>(y)});
      map[static_cast<std::size_t>(y) * width + x] = Point2{snap(s.x), snap(s.y)};
    }
  }
  return map;
}

bool inside(const Point2& s, int width, int height) {
  return s.x >= 0.0 && s.y >= 0.0 && s.x <= width - 1 && s.y <= height - 1;
}

HuImage sample_bilinear(const HuImage& in, const std::vector<Point2>& map) {
  HuImage out(in.width, in.height, Hu{-1000});
  for (std::size_t i = 0; i < map.size(); ++i) {
    const Point2& s = map[i];
    if (!inside(s, in.width, in.height)) continue;
    int x0 = static_cast<int>(std::floor(s.x));
    int y0 = static_cast<int>(std::floor(s.y));
    double fx = s.x - x0, fy = s.y - y0;
    int x1 = std::min(x0 + 1, in.width - 1);
    int y1 = std::min(y0 + 1, in.height - 1);
    double v = (1 - fx) * (1 - fy) * in.at(x0, y0) + fx * (1 - fy) * in.at(x1, y0) + (1 - fx) * fy * in.at(x0, y1) +
               fx * fy * in.at(x1, y1);
    out.pixels[i] = static_cast<Hu>(std::clamp<long>(std::lround(v), kMinHu, kMaxHu));
  }
  return out;
}

template <class T>
Image<T> sample_nearest(const Image<T>& in, const std::vector<Point2>& map, T fill) {
  Image<T> out(in.width, in.height, fill);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const Point2& s = map[i];
    if (!inside(s, in.width, in.height)) continue;
    // Half-way ties round up so HU and label geometry agree on which pixel dominates.
    int x = static_cast<int>(std::floor(s.x + 0.5));
    int y = static_cast<int>(std::floor(s.y + 0.5));
    out.pixels[i] = in.at(std::min(x, in.width - 1), std::min(y, in.height - 1));
  }
  return out;
}

void check_warp_count(std::size_t warps, int nz) {
  if (warps != 1 && warps != static_cast<std::size_t>(nz)) {
    throw InvalidArgument("warp set has " + std::to_string(warps) + " functions for " + std::to_string(nz) +
                          " frames");
  }
}

}  // namespace

double tps_kernel(double r2) { return r2 > 0.0 ? r2 * std::log(r2) : 0.0; }

Point2 WarpFunction::operator()(Point2 p) const {
  double out[2];
  for (int c = 0; c < 2; ++c) out[c] = affine[c][0] + affine[c][1] * p.x + affine[c][2] * p.y;
  for (std::size_t i = 0; i < source.size(); ++i) {
    double dx = p.x - source[i].x, dy = p.y - source[i].y;
    double u = tps_kernel(dx * dx + dy * dy);
    out[0] += weights[0][i] * u;
    out[1] += weights[1][i] * u;
  }
  return Point2{out[0], out[1]};
}

WarpFunction WarpFunction::inverse() const { return fit_tps(target, source); }

WarpFunction fit_tps(std::span<const Point2> source, std::span<const Point2> target) {
  if (source.size() != target.size()) throw InvalidArgument("control point lists differ in length");
  check_points(source);
  for (const auto& q : target) {
    if (!std::isfinite(q.x) || !std::isfinite(q.y)) throw InvalidArgument("target point is not finite");
  }
  const int n = static_cast<int>(source.size());
  const int m = n + 3;
  // Points are centred before solving; the affine part is shifted back afterwards.
  double cx = 0.0, cy = 0.0;
  for (const auto& p : source) cx += p.x, cy += p.y;
  cx /= n, cy /= n;

  std::vector<double> a(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double dx = source[i].x - source[j].x, dy = source[i].y - source[j].y;
      a[i * m + j] = tps_kernel(dx * dx + dy * dy);
    }
    double row[3] = {1.0, source[i].x - cx, source[i].y - cy};
    for (int k = 0; k < 3; ++k) {
      a[i * m + n + k] = row[k];
      a[(n + k) * m + i] = row[k];
    }
  }
  std::vector<std::vector<double>> rhs(2, std::vector<double>(m, 0.0));
  for (int i = 0; i < n; ++i) {
    rhs[0][i] = target[i].x;
    rhs[1][i] = target[i].y;
  }
  std::vector<std::vector<double>> sol = rhs;
  if (!lu_solve(a, m, sol)) throw SingularError("thin-plate spline system is singular");
  // One round of iterative refinement keeps residuals near machine precision.
  std::vector<std::vector<double>> res(2, std::vector<double>(m));
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < m; ++i) {
      double s = rhs[c][i];
      for (int j = 0; j < m; ++j) s -= a[i * m + j] * sol[c][j];
      res[c][i] = s;
    }
  }
  if (lu_solve(a, m, res)) {
    for (int c = 0; c < 2; ++c) {
      for (int i = 0; i < m; ++i) sol[c][i] += res[c][i];
    }
  }

  WarpFunction f;
  f.source.assign(source.begin(), source.end());
  f.target.assign(target.begin(), target.end());
  for (int c = 0; c < 2; ++c) {
    f.weights[c].assign(sol[c].begin(), sol[c].begin() + n);
    double a0 = sol[c][n], a1 = sol[c][n + 1], a2 = sol[c][n + 2];
    f.affine[c] = {a0 - a1 * cx - a2 * cy, a1, a2};
  }
  return f;
}

HuImage warp_frame(const HuImage& frame, const WarpFunction& f) {
  return sample_bilinear(frame, sample_map(frame.width, frame.height, f));
}

Image<Label> warp_frame(const Image<Label>& frame, const WarpFunction& f) {
  return sample_nearest(frame, sample_map(frame.width, frame.height, f), Label::ExteriorAir);
}

Mask warp_frame(const Mask& frame, const WarpFunction& f) {
  return sample_nearest(frame, sample_map(frame.width, frame.height, f), std::uint8_t{0});
}

std::vector<WarpFunction> incremental_warps(std::span<const Point2> first, std::span<const Point2> last, int n) {
  if (n < 1) throw InvalidArgument("warp set needs at least one frame");
  if (first.size() != last.size()) throw InvalidArgument("control point lists differ in length");
  auto at_step = [&](int k) {
    std::vector<Point2> p(first.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = Point2{first[i].x + k * (last[i].x - first[i].x) / n, first[i].y + k * (last[i].y - first[i].y) / n};
    }
    return p;
  };
  std::vector<WarpFunction> out;
  out.reserve(n);
  std::vector<Point2> prev = at_step(0);
  for (int k = 1; k <= n; ++k) {
    std::vector<Point2> next = at_step(k);
    out.push_back(fit_tps(prev, next));
    prev = std::move(next);
  }
  return out;
}

std::vector<int> warp_set_order(int set_id, int n) {
  if (n < 1) throw InvalidArgument("warp set needs at least one frame");
  std::vector<int> order;
  order.reserve(n);
  switch (set_id) {
    case 1:
      for (int k = 0; k < n; ++k) order.push_back(k);
      return order;
    case 2:
      for (int k = n - 1; k >= 0; --k) order.push_back(k);
      return order;
    case 3:
    case 4:
      break;
    default:
      throw InvalidArgument("warp set id must be 1..4, got " + std::to_string(set_id));
  }
  if (n % 2 != 0) throw InvalidArgument("warp set " + std::to_string(set_id) + " needs an even frame count");
  const int h = n / 2;
  if (set_id == 3) {
    for (int k = 0; k < h; ++k) order.push_back(k);
    for (int k = h - 1; k >= 0; --k) order.push_back(k);
  } else {
    for (int k = h - 1; k >= 0; --k) order.push_back(k);
    for (int k = 0; k < h; ++k) order.push_back(k);
  }
  return order;
}

WarpSet make_warp_set(std::span<const Point2> first, std::span<const Point2> last, int n, int set_id) {
  std::vector<int> order = warp_set_order(set_id, n);
  std::vector<WarpFunction> f = incremental_warps(first, last, n);
  WarpSet s{set_id, {}};
  s.functions.reserve(n);
  for (int k : order) s.functions.push_back(f[k]);
  return s;
}

std::array<WarpSet, 4> make_warp_sets(std::span<const Point2> first, std::span<const Point2> last, int n) {
  std::vector<WarpFunction> f = incremental_warps(first, last, n);
  std::array<WarpSet, 4> sets;
  for (int id = 1; id <= 4; ++id) {
    WarpSet& s = sets[id - 1];
    s.id = id;
    for (int k : warp_set_order(id, n)) s.functions.push_back(f[k]);
  }
  return sets;
}

Volume warp_volume(const Volume& v, std::span<const WarpFunction> warps, Exec exec) {
  const Dims d = v.dims();
  check_warp_count(warps.size(), d.nz);
  Volume out(d, v.spacing());
  std::vector<Point2> shared;
  if (warps.size() == 1) shared = sample_map(d.nx, d.ny, warps[0]);
  for_each_index(exec, d.nz, [&](int z) {
    auto map = warps.size() == 1 ? std::vector<Point2>{} : sample_map(d.nx, d.ny, warps[z]);
    out.set_frame(z, sample_bilinear(v.frame_image(z), warps.size() == 1 ? shared : map));
  });
  return out;
}

LabelVolume warp_volume(const LabelVolume& labels, std::span<const WarpFunction> warps, Exec exec) {
  const Dims d = labels.dims();
  check_warp_count(warps.size(), d.nz);
  LabelVolume out(d, labels.spacing());
  std::vector<Point2> shared;
  if (warps.size() == 1) shared = sample_map(d.nx, d.ny, warps[0]);
  for_each_index(exec, d.nz, [&](int z) {
    auto map = warps.size() == 1 ? std::vector<Point2>{} : sample_map(d.nx, d.ny, warps[z]);
    out.set_frame(z, sample_nearest(labels.frame_image(z), warps.size() == 1 ? shared : map, Label::ExteriorAir));
  });
  return out;
}

WarpedVolume warp_volume(const Volume& v, const LabelVolume& labels, std::span<const WarpFunction> warps,
                         Exec exec) {
  const Dims d = v.dims();
  if (!(labels.dims() == d)) throw DimensionMismatch("volume and label dimensions differ");
  check_warp_count(warps.size(), d.nz);
  WarpedVolume out{Volume(d, v.spacing()), LabelVolume(d, labels.spacing())};
  std::vector<Point2> shared;
  if (warps.size() == 1) shared = sample_map(d.nx, d.ny, warps[0]);
  for_each_index(exec, d.nz, [&](int z) {
    auto own = warps.size() == 1 ? std::vector<Point2>{} : sample_map(d.nx, d.ny, warps[z]);
    const auto& map = warps.size() == 1 ? shared : own;
    out.volume.set_frame(z, sample_bilinear(v.frame_image(z), map));
    out.labels.set_frame(z, sample_nearest(labels.frame_image(z), map, Label::ExteriorAir));
  });
  return out;
}

ControlPoints parse_control_points(std::string_view text) {
  ControlPoints cp;
  for_each_record(text, [&](int line_no, const std::vector<std::string_view>& f) {
    if (f.size() != 4) bad_line(line_no, "expected x,y,x',y'");
    cp.source.push_back(Point2{to_double(f[0], line_no), to_double(f[1], line_no)});
    cp.target.push_back(Point2{to_double(f[2], line_no), to_double(f[3], line_no)});
  });
  return cp;
}

ControlPoints load_control_points(const std::filesystem::path& path) {
  return parse_control_points(read_text(path));
}

std::string format_control_points(const ControlPoints& cp) {
  std::string out = "# x,y,x',y'\n";
  for (std::size_t i = 0; i < cp.source.size(); ++i) {
    out += number(cp.source[i].x) + "," + number(cp.source[i].y) + "," + number(cp.target[i].x) + "," +
           number(cp.target[i].y) + "\n";
  }
  return out;
}

ControlPoints default_control_points(int width, int height, std::uint64_t seed, double max_shift) {
  if (width < 2 || height < 2) throw InvalidArgument("frame too small for control points");
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  ControlPoints cp;
  // Cell centres of a 3 x 4 tiling; each point moves by at most max_shift in a random direction.
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 3; ++c) {
      Point2 p{(2 * c + 1) * (width - 1) / 6.0, (2 * r + 1) * (height - 1) / 8.0};
      double angle = 2.0 * std::numbers::pi * uniform();
      double len = max_shift * uniform();
      cp.source.push_back(p);
      cp.target.push_back(Point2{p.x + len * std::cos(angle), p.y + len * std::sin(angle)});
    }
  }
  return cp;
}

std::optional<int> parse_warp_set(std::string_view name) {
  if (name == "single") return 0;
  if (name.size() == 1 && name[0] >= '1' && name[0] <= '4') return name[0] - '0';
  return std::nullopt;
}

}  // namespace segd
