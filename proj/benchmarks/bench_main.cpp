#include "eatspeed/checkpoint.hpp"
#include "eatspeed/episodes.hpp"
#include "eatspeed/inference.hpp"
#include "eatspeed/preprocess.hpp"
#include "eatspeed/synth.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace eatspeed;

namespace {

Recording minutes_of_data(double minutes) {
  SynthSpec spec;
  spec.day_duration_s = 60.0 * minutes;
  spec.seed = 3;
  return generate(spec).recording;
}

// Single hand, default network, state.range(0) minutes of 16 Hz frames.
void BM_PredictHand(benchmark::State& state) {
  const auto ckpt = Checkpoint::from_network(Network<float>(ModelConfig{}), NormStats{});
  const auto rec = minutes_of_data(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(predict_hand(rec, ckpt, Hand::kRight));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 960);
}
BENCHMARK(BM_PredictHand)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_PredictBothHands(benchmark::State& state) {
  const auto ckpt = Checkpoint::from_network(Network<float>(ModelConfig{}), NormStats{});
  const auto rec = minutes_of_data(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(predict(rec, ckpt));
}
BENCHMARK(BM_PredictBothHands)->Unit(benchmark::kMillisecond);

void BM_Downsample(benchmark::State& state) {
  const auto rec = minutes_of_data(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(downsample(rec.right, kProcessedRateHz));
  state.SetItemsProcessed(state.iterations() * rec.right.size());
}
BENCHMARK(BM_Downsample)->Arg(60)->Unit(benchmark::kMillisecond);

// Bite midpoints: dense meals plus scattered noise, at a fixed density.
void BM_Dbscan(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> day(0.0, 60.0 * static_cast<double>(state.range(0)));
  std::vector<double> points;
  while (static_cast<std::int64_t>(points.size()) < state.range(0)) {
    const double meal = day(rng);
    for (int i = 0; i < 40; ++i) points.push_back(meal + 15.0 * i);
    points.push_back(day(rng));
  }
  points.resize(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dbscan_1d(points, kEpisodeEpsS, kEpisodeMinSamples));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Dbscan)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

}  // namespace
