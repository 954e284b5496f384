#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>
#include <set>

#include "segd/error.hpp"
#include "segd/phantom.hpp"
#include "segd/tps.hpp"
#include "segd/volume_io.hpp"
#include "support.hpp"

using namespace segd;

namespace {

std::vector<Point2> random_points(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Point2> p(n);
  for (auto& q : p) q = {u(rng), u(rng)};
  return p;
}

std::vector<Point2> jitter(std::mt19937_64& rng, const std::vector<Point2>& p, double amount) {
  std::uniform_real_distribution<double> u(-amount, amount);
  std::vector<Point2> out = p;
  for (auto& q : out) q = {q.x + u(rng), q.y + u(rng)};
  return out;
}

// Dense solve of the bordered TPS system [K P; P^T 0] [w; a] = [t; 0] in raw coordinates.
struct OracleFit {
  Eigen::VectorXd w[2];
  Eigen::Vector3d a[2];
};

OracleFit eigen_oracle(const std::vector<Point2>& src, const std::vector<Point2>& dst) {
  const int n = static_cast<int>(src.size());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n + 3, n + 3);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double dx = src[i].x - src[j].x, dy = src[i].y - src[j].y;
      double r2 = dx * dx + dy * dy;
      L(i, j) = r2 > 0 ? r2 * std::log(r2) : 0.0;
    }
    L(i, n) = L(n, i) = 1.0;
    L(i, n + 1) = L(n + 1, i) = src[i].x;
    L(i, n + 2) = L(n + 2, i) = src[i].y;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(L);
  OracleFit out;
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 3);
    for (int i = 0; i < n; ++i) rhs(i) = c == 0 ? dst[i].x : dst[i].y;
    Eigen::VectorXd x = lu.solve(rhs);
    out.w[c] = x.head(n);
    out.a[c] = x.tail(3);
  }
  return out;
}

double side_residual(const WarpFunction& f) {
  double worst = 0;
  for (int c = 0; c < 2; ++c) {
    double s = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < f.source.size(); ++i) {
      s += f.weights[c][i];
      sx += f.weights[c][i] * f.source[i].x;
      sy += f.weights[c][i] * f.source[i].y;
    }
    worst = std::max({worst, std::abs(s), std::abs(sx), std::abs(sy)});
  }
  return worst;
}

double interp_residual(const WarpFunction& f) {
  double worst = 0;
  for (std::size_t i = 0; i < f.source.size(); ++i) {
    Point2 q = f(f.source[i]);
    worst = std::max({worst, std::abs(q.x - f.target[i].x), std::abs(q.y - f.target[i].y)});
  }
  return worst;
}

}  // namespace

TEST(Tps, KernelAtZeroIsZero) {
  EXPECT_EQ(tps_kernel(0.0), 0.0);
  EXPECT_DOUBLE_EQ(tps_kernel(std::exp(1.0)), std::exp(1.0));
}

TEST(Tps, IdentityFit) {
  std::mt19937_64 rng(1);
  auto p = random_points(rng, 8, 0, 100);
  WarpFunction f = fit_tps(p, p);
  EXPECT_NEAR(f.affine[0][0], 0, 1e-9);
  EXPECT_NEAR(f.affine[0][1], 1, 1e-9);
  EXPECT_NEAR(f.affine[0][2], 0, 1e-9);
  EXPECT_NEAR(f.affine[1][0], 0, 1e-9);
  EXPECT_NEAR(f.affine[1][1], 0, 1e-9);
  EXPECT_NEAR(f.affine[1][2], 1, 1e-9);
  for (int c = 0; c < 2; ++c)
    for (double w : f.weights[c]) EXPECT_NEAR(w, 0, 1e-9);
}

TEST(Tps, PureTranslation) {
  std::mt19937_64 rng(2);
  auto p = random_points(rng, 7, 0, 100);
  std::vector<Point2> q = p;
  for (auto& x : q) x.x += 5;
  WarpFunction f = fit_tps(p, q);
  for (Point2 s : random_points(rng, 20, -50, 150)) {
    Point2 t = f(s);
    EXPECT_NEAR(t.x, s.x + 5, 1e-9);
    EXPECT_NEAR(t.y, s.y, 1e-9);
  }
}

TEST(Tps, RandomFitsMatchDenseOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = random_points(rng, 6, 0, 255);
    auto q = random_points(rng, 6, 0, 255);
    WarpFunction f = fit_tps(p, q);
    EXPECT_LE(interp_residual(f), 1e-6);
    EXPECT_LE(side_residual(f), 1e-9);
    OracleFit o = eigen_oracle(p, q);
    for (int c = 0; c < 2; ++c) {
      for (int i = 0; i < 6; ++i) EXPECT_NEAR(f.weights[c][i], o.w[c](i), 1e-8 * (1 + std::abs(o.w[c](i))));
      for (int k = 0; k < 3; ++k) EXPECT_NEAR(f.affine[c][k], o.a[c](k), 1e-6 * (1 + std::abs(o.a[c](k))));
    }
  }
}

TEST(Tps, DegenerateInputsAreSingular) {
  EXPECT_THROW(fit_tps(std::vector<Point2>{{0, 0}, {1, 1}}, std::vector<Point2>{{0, 0}, {1, 1}}), SingularError);
  std::vector<Point2> line = {{0, 0}, {1, 1}, {2, 2}, {5, 5}};
  EXPECT_THROW(fit_tps(line, line), SingularError);
  std::vector<Point2> dup = {{0, 0}, {4, 1}, {0, 0}, {2, 7}};
  EXPECT_THROW(fit_tps(dup, dup), SingularError);
}

TEST(Tps, InverseUndoesAtControlPoints) {
  std::mt19937_64 rng(4);
  auto p = random_points(rng, 9, 10, 200);
  auto q = jitter(rng, p, 6);
  WarpFunction f = fit_tps(p, q);
  WarpFunction g = f.inverse();
  for (std::size_t i = 0; i < p.size(); ++i) {
    Point2 back = g(f(p[i]));
    EXPECT_NEAR(back.x, p[i].x, 1e-6);
    EXPECT_NEAR(back.y, p[i].y, 1e-6);
  }
}

TEST(WarpFrame, IdentityLeavesImageUnchanged) {
  std::mt19937_64 rng(5);
  HuImage img(23, 17);
  std::uniform_int_distribution<int> hu(-1000, 2000);
  for (auto& h : img.pixels) h = static_cast<Hu>(hu(rng));
  auto p = random_points(rng, 5, 0, 16);
  WarpFunction id = fit_tps(p, p);
  EXPECT_EQ(warp_frame(img, id), img);
}

// Shifting content by +(5, 0) equals a direct index shift with air fill.
TEST(WarpFrame, IntegerTranslationIsExact) {
  std::mt19937_64 rng(6);
  HuImage img(20, 12);
  Image<Label> lab(20, 12);
  std::uniform_int_distribution<int> hu(-1000, 2000), code(0, 5);
  for (auto& h : img.pixels) h = static_cast<Hu>(hu(rng));
  for (auto& l : lab.pixels) l = static_cast<Label>(code(rng));
  std::vector<Point2> p = {{2, 2}, {15, 3}, {7, 9}, {18, 10}};
  std::vector<Point2> q = p;
  for (auto& x : q) x.x += 5;
  WarpFunction f = fit_tps(p, q);
  HuImage w = warp_frame(img, f);
  Image<Label> wl = warp_frame(lab, f);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 20; ++x) {
      Hu expect = x >= 5 ? img.at(x - 5, y) : Hu{-1000};
      Label expect_l = x >= 5 ? lab.at(x - 5, y) : Label::ExteriorAir;
      ASSERT_EQ(w.at(x, y), expect) << x << "," << y;
      ASSERT_EQ(wl.at(x, y), expect_l) << x << "," << y;
    }
}

TEST(WarpFrame, LabelsStayCategoricalAndMatchIndicatorWarp) {
  Phantom ph = generate_phantom(segd::testing::small_spec());
  Image<Label> lab = ph.truth.frame_image(15);
  ControlPoints cp = default_control_points(lab.width, lab.height, 3);
  WarpFunction f = fit_tps(cp.source, cp.target);
  Image<Label> w = warp_frame(lab, f);
  std::set<Label> in(lab.pixels.begin(), lab.pixels.end()), out(w.pixels.begin(), w.pixels.end());
  in.insert(Label::ExteriorAir);
  for (Label l : out) EXPECT_TRUE(in.count(l));
  for (Label l : {Label::Body, Label::Bandage, Label::Support}) {
    Mask ind(lab.width, lab.height, 0);
    for (std::size_t i = 0; i < ind.pixels.size(); ++i) ind.pixels[i] = lab.pixels[i] == l;
    Mask wi = warp_frame(ind, f);
    for (std::size_t i = 0; i < wi.pixels.size(); ++i) ASSERT_EQ(wi.pixels[i] != 0, w.pixels[i] == l);
  }
}

TEST(WarpSets, OrdersForFourFrames) {
  EXPECT_EQ(warp_set_order(1, 4), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(warp_set_order(2, 4), (std::vector<int>{3, 2, 1, 0}));
  EXPECT_EQ(warp_set_order(3, 4), (std::vector<int>{0, 1, 1, 0}));
  EXPECT_EQ(warp_set_order(4, 4), (std::vector<int>{1, 0, 0, 1}));
  EXPECT_THROW(warp_set_order(3, 5), InvalidArgument);
  EXPECT_THROW(warp_set_order(5, 4), InvalidArgument);
  EXPECT_EQ(warp_set_order(1, 5).size(), 5u);
}

TEST(WarpSets, Set1CompositionReachesFinalPoints) {
  std::mt19937_64 rng(7);
  auto first = random_points(rng, 12, 0, 255);
  auto last = jitter(rng, first, 8);
  const int n = 24;
  auto sets = make_warp_sets(first, last, n);
  for (const auto& f : sets[0].functions) {
    EXPECT_LE(interp_residual(f), 1e-6);
    EXPECT_LE(side_residual(f), 1e-9);
  }
  for (std::size_t i = 0; i < first.size(); ++i) {
    Point2 p = first[i];
    for (const auto& f : sets[0].functions) p = f(p);
    EXPECT_NEAR(p.x, last[i].x, 1e-5);
    EXPECT_NEAR(p.y, last[i].y, 1e-5);
  }
  // Sets 2-4 are permutations of set 1.
  for (int s = 1; s < 4; ++s) {
    auto order = warp_set_order(s + 1, n);
    for (int k = 0; k < n; ++k) EXPECT_EQ(sets[s].functions[k].target, sets[0].functions[order[k]].target);
  }
}

TEST(WarpSets, UnchangedPointsGiveIdentities) {
  std::mt19937_64 rng(8);
  auto p = random_points(rng, 6, 0, 100);
  for (const auto& f : incremental_warps(p, p, 6))
    for (Point2 s : random_points(rng, 5, 0, 100)) {
      Point2 t = f(s);
      EXPECT_NEAR(t.x, s.x, 1e-9);
      EXPECT_NEAR(t.y, s.y, 1e-9);
    }
}

TEST(WarpVolume, IdentityAndCountCheck) {
  Phantom ph = generate_phantom(segd::testing::small_spec());
  std::vector<Point2> p = {{10, 10}, {80, 12}, {40, 70}};
  std::vector<WarpFunction> id = {fit_tps(p, p)};
  EXPECT_EQ(warp_volume(ph.volume, id), ph.volume);
  std::vector<WarpFunction> two(2, id[0]);
  EXPECT_THROW(warp_volume(ph.volume, two), InvalidArgument);
}

TEST(WarpVolume, SerialMatchesParallelAndDeterministic) {
  Phantom ph = generate_phantom(segd::testing::small_spec());
  const Dims d = ph.volume.dims();
  ControlPoints cp = default_control_points(d.nx, d.ny, 1);
  WarpSet set = make_warp_set(cp.source, cp.target, d.nz, 3);
  WarpedVolume a = warp_volume(ph.volume, ph.truth, set.functions, Exec::Parallel);
  WarpedVolume b = warp_volume(ph.volume, ph.truth, set.functions, Exec::Serial);
  EXPECT_EQ(encode_volume(a.volume), encode_volume(b.volume));
  EXPECT_EQ(encode_labels(a.labels), encode_labels(b.labels));
}

// With the same image in every frame, set 1 and set 2 give z-mirrored volumes.
TEST(WarpVolume, Set1AndSet2MirrorOnSymmetricVolume) {
  Volume v(Dims{40, 32, 6}, Spacing{});
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> hu(-1000, 1000);
  HuImage frame(40, 32);
  for (auto& h : frame.pixels) h = static_cast<Hu>(hu(rng));
  for (int z = 0; z < 6; ++z) v.set_frame(z, frame);
  ControlPoints cp = default_control_points(40, 32, 4, 4.0);
  auto sets = make_warp_sets(cp.source, cp.target, 6);
  Volume a = warp_volume(v, sets[0].functions);
  Volume b = warp_volume(v, sets[1].functions);
  for (int z = 0; z < 6; ++z) EXPECT_EQ(a.frame_image(z), b.frame_image(5 - z));
}

// Small perturbations keep the body volume; the measured drift at the 8 px default is larger.
TEST(WarpVolume, SmallPerturbationPreservesBodyCount) {
  Phantom ph = generate_phantom(PhantomSpec{});
  const Dims d = ph.truth.dims();
  double body = static_cast<double>(ph.truth.count(Label::Body));
  for (std::uint64_t seed : {1, 2}) {
    ControlPoints cp = default_control_points(d.nx, d.ny, seed, 2.0);
    std::vector<WarpFunction> single = {fit_tps(cp.source, cp.target)};
    LabelVolume w = warp_volume(ph.truth, single);
    EXPECT_NEAR(static_cast<double>(w.count(Label::Body)) / body, 1.0, 0.05) << "seed " << seed;
  }
}

TEST(ControlPointsIo, ParseFormatRoundTrip) {
  ControlPoints cp = default_control_points(256, 256, 1);
  ASSERT_EQ(cp.source.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i)
    EXPECT_LE(std::hypot(cp.target[i].x - cp.source[i].x, cp.target[i].y - cp.source[i].y), 8.0);
  ControlPoints back = parse_control_points(format_control_points(cp));
  EXPECT_EQ(back.source, cp.source);
  EXPECT_EQ(back.target, cp.target);
  EXPECT_THROW(parse_control_points("1,2,3\n"), FormatError);
}

TEST(ControlPointsIo, WarpSetNames) {
  EXPECT_EQ(parse_warp_set("single"), 0);
  EXPECT_EQ(parse_warp_set("3"), 3);
  EXPECT_FALSE(parse_warp_set("5").has_value());
  EXPECT_FALSE(parse_warp_set("all").has_value());
}
