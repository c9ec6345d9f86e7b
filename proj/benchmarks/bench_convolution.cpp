#include <benchmark/benchmark.h>

#include <random>

#include "volkey/scalespace.hpp"

namespace {

volkey::Volume noise_volume(int n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  volkey::Volume v(volkey::Dims{n, n, n});
  for (auto& x : v.data()) x = u(rng);
  return v;
}

// Args: edge length, tile edge k, workers.
void BM_ConvolveSeparable(benchmark::State& state) {
  const auto v = noise_volume(static_cast<int>(state.range(0)));
  const auto kernel = volkey::gaussian_kernel(1.6);
  const volkey::ParallelOptions par{static_cast<int>(state.range(2)), static_cast<int>(state.range(1))};
  for (auto _ : state) benchmark::DoNotOptimize(volkey::convolve_separable(v, kernel, par));
  state.SetItemsProcessed(state.iterations() * v.data().size());
}
BENCHMARK(BM_ConvolveSeparable)
    ->ArgsProduct({{64, 128}, {1, 2, 5, 9, 10}, {1, 4}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

void BM_GaussianPyramid(benchmark::State& state) {
  const auto v = noise_volume(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(volkey::build_gaussian_pyramid(v));
}
BENCHMARK(BM_GaussianPyramid)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Subsample(benchmark::State& state) {
  const auto v = noise_volume(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(volkey::subsample_half(v));
}
BENCHMARK(BM_Subsample)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
