#include <benchmark/benchmark.h>

#include <random>

#include "odepth/layers.hpp"
#include "odepth/network.hpp"

namespace {

odepth::Tensor input(int size) {
  odepth::Tensor x(1, 3, size, size);
  for (std::size_t i = 0; i < x.values.size(); ++i) x.values[i] = static_cast<double>(i % 17) / 17.0;
  return x;
}

void BM_ConvForward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  odepth::Conv2d conv("c", c, c, 3, 1);
  std::mt19937_64 rng(1);
  conv.init(rng);
  odepth::Tensor x(1, c, 32, 32);
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x));
}
BENCHMARK(BM_ConvForward)->Arg(16)->Arg(64);

void BM_NetworkForward(benchmark::State& state) {
  odepth::Network net(odepth::NetConfig{});
  const auto x = input(static_cast<int>(state.range(0)));
  net.calibrate(x);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
}
BENCHMARK(BM_NetworkForward)->Arg(32)->Arg(64);

void BM_NetworkStep(benchmark::State& state) {
  odepth::Network net(odepth::NetConfig{});
  const auto x = input(static_cast<int>(state.range(0)));
  net.calibrate(x);
  for (auto _ : state) {
    const auto y = net.forward(x);
    odepth::Tensor g(y.n(), y.c(), y.h(), y.w());
    g.values.assign(g.values.size(), 1e-3);
    net.zero_grad();
    net.backward(g);
  }
}
BENCHMARK(BM_NetworkStep)->Arg(32)->Arg(64);

}  // namespace
