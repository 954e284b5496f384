// Acceptance suite: one PASS/FAIL line per criterion with its pinned tolerance.
// Exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "segd/evaluation.hpp"
#include "segd/maxflow.hpp"
#include "segd/pipeline.hpp"
#include "segd/tps.hpp"
#include "segd/volume_io.hpp"
#include "support.hpp"

using namespace segd;
using namespace segd::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(const char* name, const std::function<Outcome()>& check) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++g_failures;
  std::printf("%s  %-22s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PipelineConfig pipeline_config(const Phantom& p) {
  PipelineConfig cfg;
  cfg.preprocess.support_template = p.support_template;
  cfg.tracking.auto_init = true;
  return cfg;
}

double body_iou(const Volume& v, const LabelVolume& gt, const PipelineConfig& cfg) {
  return evaluate(run_pipeline(v, cfg, {}, {}).final_labels(), gt).overall;
}

// ---- criteria ----

Outcome geodesic_oracle() {
  constexpr int kGraphs = 210, kMaxNodes = 30, kMaxWeight = 20;
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  int mismatches = 0, checks = 0;
  for (int i = 0; i < kGraphs; ++i) {
    RandomGridGraph r = random_grid_graph(rng, kMaxNodes, kMaxWeight);
    PatchGraph g = as_patch_graph(r);
    for (int m : {1, 3, 10}) {
      auto field = geodesic_multi(g, m);
      auto oracle = brute_top_m(r, m);
      ++checks;
      bool same = field.has_value();
      for (int v = 0; same && v < r.num_nodes(); ++v) {
        auto got = field->top.of(v);
        same = std::equal(got.begin(), got.end(), oracle[v].begin(), oracle[v].end());
      }
      mismatches += !same;
    }
  }
  double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 10.0,
          fmt("%d graphs x m{1,3,10}: %d/%d exact (need all), %.2f s (limit 10 s)", kGraphs, checks - mismatches,
              checks, secs)};
}

Outcome mincut_oracle() {
  constexpr int kGraphs = 120, kMaxNodes = 12, kMaxCap = 20;
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(4242);
  int ok = 0;
  for (int i = 0; i < kGraphs; ++i) {
    RandomCutGraph g = random_cut_graph(rng, kMaxNodes, kMaxCap);
    FlowGraph f(g.n, g.edges.size());
    for (int v = 0; v < g.n; ++v) f.add_terminal(v, g.cap_source[v], g.cap_sink[v]);
    for (const CutEdge& e : g.edges) f.add_edge(e.a, e.b, e.ab, e.ba);
    double flow = f.max_flow();
    std::vector<std::uint8_t> side(g.n);
    for (int v = 0; v < g.n; ++v) side[v] = f.is_source_side(v);
    ok += flow == brute_min_cut(g) && cut_value(g, side) == flow;
  }
  double secs = seconds_since(t0);
  return {ok == kGraphs && secs < 30.0,
          fmt("%d/%d flows equal the exhaustive min cut exactly, %.2f s (limit 30 s)", ok, kGraphs, secs)};
}

Outcome tps_exactness() {
  auto t0 = std::chrono::steady_clock::now();
  double interp = 0, side = 0, compose = 0;
  auto check_fit = [&](const WarpFunction& f) {
    for (std::size_t i = 0; i < f.source.size(); ++i) {
      Point2 q = f(f.source[i]);
      interp = std::max({interp, std::abs(q.x - f.target[i].x), std::abs(q.y - f.target[i].y)});
    }
    for (int c = 0; c < 2; ++c) {
      double s = 0, sx = 0, sy = 0;
      for (std::size_t i = 0; i < f.source.size(); ++i) {
        s += f.weights[c][i];
        sx += f.weights[c][i] * f.source[i].x;
        sy += f.weights[c][i] * f.source[i].y;
      }
      side = std::max({side, std::abs(s), std::abs(sx), std::abs(sy)});
    }
  };
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> coord(0, 255), shift(-8, 8);
  std::uniform_int_distribution<int> count(3, 16);
  int fits = 0;
  for (int i = 0; i < 200; ++i) {
    std::vector<Point2> src(count(rng)), dst;
    for (auto& p : src) p = {coord(rng), coord(rng)};
    for (auto& p : src) dst.push_back({p.x + shift(rng), p.y + shift(rng)});
    check_fit(fit_tps(src, dst));
    ++fits;
  }
  const int n = 120;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ControlPoints cp = default_control_points(256, 256, seed, 8.0);
    WarpSet set1 = make_warp_set(cp.source, cp.target, n, 1);
    for (const auto& f : set1.functions) check_fit(f);
    fits += n;
    for (std::size_t i = 0; i < cp.source.size(); ++i) {
      Point2 p = cp.source[i];
      for (const auto& f : set1.functions) p = f(p);
      compose = std::max({compose, std::abs(p.x - cp.target[i].x), std::abs(p.y - cp.target[i].y)});
    }
  }
  double secs = seconds_since(t0);
  return {interp <= 1e-6 && side <= 1e-9 && compose <= 1e-5 && secs < 5.0,
          fmt("%d fits: interpolation %.2e (tol 1e-6), side conditions %.2e (tol 1e-9), "
              "Set-1 composition %.2e (tol 1e-5), %.2f s (limit 5 s)",
              fits, interp, side, compose, secs)};
}

struct EndToEnd {
  Phantom phantom;
  PipelineConfig cfg;
  PipelineResult result;
  double iou = 0.0;
  double seconds = 0.0;
};

Outcome end_to_end(EndToEnd& e) {
  auto t0 = std::chrono::steady_clock::now();
  e.phantom = generate_phantom(PhantomSpec{});
  e.cfg = pipeline_config(e.phantom);
  e.result = run_pipeline(e.phantom.volume, e.cfg, {}, {});
  e.iou = evaluate(e.result.final_labels(), e.phantom.truth).overall;
  e.seconds = seconds_since(t0);
  return {e.iou >= 0.85 && e.seconds < 300.0,
          fmt("default phantom, auto-init tracking: body IOU %.4f (need >= 0.85), %.1f s (limit 300 s)", e.iou,
              e.seconds)};
}

Outcome ablation() {
  Phantom p = generate_phantom(PhantomSpec::with_distractors(1));
  PipelineConfig cfg = pipeline_config(p);
  PipelineResult without = run_pipeline(p.volume, cfg, {}, {}, false);
  StageOutput tracked = run_stage(Stage::Track, p.volume, &without.final_labels(), cfg, {}, {});
  double w = evaluate(tracked.labels, p.truth).overall;
  double wo = evaluate(without.final_labels(), p.truth).overall;
  return {w >= wo, fmt("distractor phantom: with tracking %.4f >= without %.4f", w, wo)};
}

Outcome warp_robustness(const EndToEnd& e) {
  const Volume& v = e.phantom.volume;
  const LabelVolume& gt = e.phantom.truth;
  std::string detail = fmt("unwarped %.4f;", e.iou);
  double worst = 0.0;
  auto run = [&](const char* name, std::span<const WarpFunction> warps) {
    WarpedVolume w = warp_volume(v, gt, warps);
    double iou = body_iou(w.volume, w.labels, e.cfg);
    worst = std::max(worst, std::abs(iou - e.iou));
    detail += fmt(" %s %.4f", name, iou);
  };
  for (std::uint64_t seed : {1, 2}) {
    ControlPoints cp = default_control_points(v.dims().nx, v.dims().ny, seed, 8.0);
    WarpFunction f = fit_tps(cp.source, cp.target);
    run(seed == 1 ? "Warp1" : "Warp2", std::span(&f, 1));
  }
  ControlPoints cp = default_control_points(v.dims().nx, v.dims().ny, 1, 8.0);
  auto sets = make_warp_sets(cp.source, cp.target, v.dims().nz);
  for (const WarpSet& s : sets) run(fmt("Set%d", s.id).c_str(), s.functions);
  detail += fmt("; max |delta| %.4f (tol 0.05)", worst);
  return {worst <= 0.05, detail};
}

Outcome preprocess_exactness() {
  static constexpr Label kClasses[] = {Label::ExteriorAir, Label::Support, Label::Metal, Label::Hollow};
  // Noiseless: every voxel of the four classes matches.
  Phantom clean = generate_phantom(PhantomSpec::noiseless(1));
  PreprocessConfig cfg;
  cfg.support_template = clean.support_template;
  LabelVolume labels = run_preprocess(clean.volume, cfg).labels;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < labels.data().size(); ++i)
    for (Label c : kClasses) wrong += (labels.data()[i] == c) != (clean.truth.data()[i] == c);

  // Default noise: per-class IOU.
  Phantom noisy = generate_phantom(PhantomSpec{});
  cfg.support_template = noisy.support_template;
  PreprocessResult r = run_preprocess(noisy.volume, cfg);
  double worst_iou = 1.0;
  std::string per_class;
  for (Label c : kClasses) {
    double v = class_iou(r.labels, noisy.truth, c);
    worst_iou = std::min(worst_iou, v);
    per_class += fmt(" %s %.4f", std::string(label_name(c)).c_str(), v);
  }

  // Metal recall: a disc counts as found when one component covers at least half its voxels.
  int found = 0;
  for (const MetalDisc& disc : noisy.metal) {
    std::vector<std::size_t> voxels;
    for (int z = disc.z0; z <= disc.z1; ++z)
      for (int y = 0; y < noisy.truth.dims().ny; ++y)
        for (int x = 0; x < noisy.truth.dims().nx; ++x) {
          double dx = x - disc.cx, dy = y - disc.cy;
          if (noisy.truth.at(x, y, z) == Label::Metal && dx * dx + dy * dy <= (disc.radius + 1) * (disc.radius + 1))
            voxels.push_back(noisy.truth.index(x, y, z));
        }
    for (const MetalComponent& c : r.metal) {
      std::size_t hit = 0;
      for (std::size_t v : voxels) hit += std::binary_search(c.voxels.begin(), c.voxels.end(), v);
      if (!voxels.empty() && 2 * hit >= voxels.size()) {
        ++found;
        break;
      }
    }
  }
  int discs = static_cast<int>(noisy.metal.size());
  return {wrong == 0 && worst_iou >= 0.95 && found == discs,
          fmt("noiseless mismatches %zu (need 0); noisy IOU%s (need >= 0.95); metal recall %d/%d (need all)", wrong,
              per_class.c_str(), found, discs)};
}

Outcome format_determinism(const EndToEnd& e) {
  // MVOL round trip through bytes and through a file.
  TempDir dir;
  auto vbytes = encode_volume(e.phantom.volume);
  auto lbytes = encode_labels(e.phantom.truth);
  bool round = decode_volume(vbytes) == e.phantom.volume && decode_labels(lbytes) == e.phantom.truth;
  save_volume(e.phantom.volume, dir / "v.mvol");
  save_labels(e.phantom.truth, dir / "l.mvol");
  round = round && file_bytes(dir / "v.mvol") == vbytes && file_bytes(dir / "l.mvol") == lbytes &&
          load_volume(dir / "v.mvol") == e.phantom.volume && load_labels(dir / "l.mvol") == e.phantom.truth;

  // Phantom regeneration and every stage rerun on its recorded input.
  bool phantom_same = encode_volume(generate_phantom(PhantomSpec{}).volume) == vbytes;
  std::string stages;
  bool reruns = true;
  const LabelVolume* previous = nullptr;
  for (const auto& [stage, out] : e.result.stages) {
    StageOutput again = run_stage(stage, e.phantom.volume, previous, e.cfg, {}, {});
    bool same = encode_labels(again.labels) == encode_labels(out.labels) && again.report == out.report;
    reruns = reruns && same;
    stages += fmt(" %s %s", std::string(stage_name(stage)).c_str(), same ? "identical" : "DIFFERENT");
    previous = &out.labels;
  }
  return {round && phantom_same && reruns,
          fmt("MVOL round trip %s; phantom regeneration %s; reruns:%s", round ? "bit-exact" : "DIFFERENT",
              phantom_same ? "identical" : "DIFFERENT", stages.c_str())};
}

}  // namespace

int main() {
  report("geodesic-oracle", geodesic_oracle);
  report("mincut-oracle", mincut_oracle);
  report("tps-exactness", tps_exactness);
  EndToEnd e;
  report("end-to-end-phantom", [&] { return end_to_end(e); });
  report("tracking-ablation", ablation);
  report("warp-robustness", [&] { return warp_robustness(e); });
  report("preprocess-exactness", preprocess_exactness);
  report("format-determinism", [&] { return format_determinism(e); });
  std::printf("%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
