#include <benchmark/benchmark.h>

#include "phantom.hpp"
#include "volkey/pipeline.hpp"

namespace {

using namespace volkey;

const testing::PhantomPair& phantom() {
  static const auto pair = testing::random_phantom_pair(1);
  return pair;
}

Config config_for(int kind) {
  Config c;
  c.detect.contrast_min = 0.01;
  c.descriptor.kind = static_cast<DescriptorKind>(kind);
  return c;
}

void BM_Detect(benchmark::State& state) {
  const auto pyr = build_gaussian_pyramid(phantom().a);
  const auto dog = build_dog_pyramid(pyr);
  for (auto _ : state) benchmark::DoNotOptimize(detect_keypoints(dog, {0, 0.01}));
}
BENCHMARK(BM_Detect)->Unit(benchmark::kMillisecond);

// Arg: descriptor kind (0 SIFT-Rank, 1 BRIEF, 2 RRIEF).
void BM_ExtractFeatures(benchmark::State& state) {
  const Config cfg = config_for(static_cast<int>(state.range(0)));
  std::size_t features = 0;
  for (auto _ : state) features = extract_features(phantom().a, cfg).described.features.size();
  state.counters["features"] = static_cast<double>(features);
}
BENCHMARK(BM_ExtractFeatures)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_MatchFeatures(benchmark::State& state) {
  const Config cfg = config_for(static_cast<int>(state.range(0)));
  const auto a = extract_features(phantom().a, cfg).described.features;
  const auto b = extract_features(phantom().b, cfg).described.features;
  std::size_t inliers = 0;
  for (auto _ : state) inliers = match_features(a, b, cfg).inlier_count();
  state.counters["inliers"] = static_cast<double>(inliers);
}
BENCHMARK(BM_MatchFeatures)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace
