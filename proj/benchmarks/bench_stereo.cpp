#include <benchmark/benchmark.h>

#include "odepth/stereo.hpp"
#include "odepth/synth.hpp"

namespace {

odepth::Stereogram scene(int size) {
  odepth::SynthSceneSpec spec;
  spec.width = size;
  spec.height = size;
  spec.layer_disparities = {2, 6};
  spec.seed = 7;
  return odepth::generate_stereogram(spec);
}

void BM_AdCost(benchmark::State& state) {
  const auto st = scene(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(odepth::ad_cost(st.left, st.right, 16));
}
BENCHMARK(BM_AdCost)->Arg(64)->Arg(128);

void BM_SgmAggregate(benchmark::State& state) {
  const auto st = scene(static_cast<int>(state.range(0)));
  const auto cv = odepth::ad_cost(st.left, st.right, 16);
  const auto params = odepth::SgmParams::defaults(3);
  for (auto _ : state) benchmark::DoNotOptimize(odepth::sgm_aggregate(cv, params));
}
BENCHMARK(BM_SgmAggregate)->Arg(64)->Arg(128);

void BM_Bilsub(benchmark::State& state) {
  const auto st = scene(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(odepth::bilsub(st.left, {}));
}
BENCHMARK(BM_Bilsub)->Arg(64)->Arg(128);

void BM_ComputeDisparity(benchmark::State& state) {
  const auto st = scene(static_cast<int>(state.range(0)));
  const odepth::StereoConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(odepth::compute_disparity(st.left, st.right, cfg));
}
BENCHMARK(BM_ComputeDisparity)->Arg(128);

}  // namespace
