// Serial reference against the OpenMP path for each frame- or chunk-parallel kernel.
// Arg 0 is Exec::Serial, arg 1 is Exec::Parallel.

#include <benchmark/benchmark.h>

#include "segd/geodesic.hpp"
#include "segd/grabcut.hpp"
#include "segd/preprocess.hpp"
#include "segd/tps.hpp"

namespace {

using namespace segd;

struct Fixture {
  Phantom phantom;
  PreprocessConfig pre;
  LabelVolume preprocessed;
  LabelVolume geodesic;
  std::vector<WarpFunction> warps;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    PhantomSpec spec;
    spec.dims = Dims{128, 128, 48};
    spec.shell_min = 4;
    spec.shell_max = 7;
    spec.metal_radius = 2;
    Fixture x{generate_phantom(spec), {}, {}, {}, {}};
    x.pre.support_template = x.phantom.support_template;
    x.preprocessed = run_preprocess(x.phantom.volume, x.pre).labels;
    x.geodesic = geodesic_stage(x.phantom.volume, x.preprocessed, GeodesicConfig{});
    ControlPoints cp = default_control_points(spec.dims.nx, spec.dims.ny, 1, 8.0);
    x.warps = make_warp_set(cp.source, cp.target, spec.dims.nz, 1).functions;
    return x;
  }();
  return f;
}

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::Serial : Exec::Parallel; }

void BM_Preprocess(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(run_preprocess(f.phantom.volume, f.pre, exec_of(state)));
}

void BM_Geodesic(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(geodesic_stage(f.phantom.volume, f.preprocessed, GeodesicConfig{}, exec_of(state)));
}

void BM_GrabCut(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(grabcut_volume(f.phantom.volume, f.geodesic, nullptr, GrabCutConfig{}, exec_of(state)));
}

void BM_Warp(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(warp_volume(f.phantom.volume, f.phantom.truth, f.warps, exec_of(state)));
}

BENCHMARK(BM_Preprocess)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Geodesic)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_GrabCut)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Warp)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
