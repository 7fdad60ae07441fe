#include <benchmark/benchmark.h>

#include <numeric>

#include "iol/kernels.hpp"

using namespace iol;

namespace {

struct Fixture {
  ModelSetup model;
  std::vector<EyeSample> eyes;
  std::vector<LabeledSample> labels;
  std::vector<std::size_t> idx;
  NetParams params;

  Fixture() {
    const Cohort c = label_cohort(sample_cohort(4096, SamplingRanges{}, 1, model), model);
    eyes = unlabeled(c);
    labels = labeled(c);
    idx.resize(eyes.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    params = init_network(2, make_input_norm(feature_ranges(SamplingRanges{})));
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

std::span<const std::size_t> batch(const benchmark::State& state) {
  return std::span<const std::size_t>(fixture().idx).first(static_cast<std::size_t>(state.range(0)));
}

void BM_PhysicalGradientSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(physical_gradient_serial(f.params, f.eyes, batch(state), f.model));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PhysicalGradientParallel(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(physical_gradient_parallel(f.params, f.eyes, batch(state), f.model));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PowerMseGradientSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(power_mse_gradient_serial(f.params, f.labels, batch(state), f.model));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PowerMseGradientParallel(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(power_mse_gradient_parallel(f.params, f.labels, batch(state), f.model));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SolvePowersSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(solve_powers_serial(f.eyes, f.model));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.eyes.size()));
}

void BM_SolvePowersParallel(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(solve_powers_parallel(f.eyes, f.model));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.eyes.size()));
}

void BM_PredictPowersSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(predict_powers_serial(f.params, f.eyes, f.model));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.eyes.size()));
}

void BM_PredictPowersParallel(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(predict_powers_parallel(f.params, f.eyes, f.model));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.eyes.size()));
}

}  // namespace

BENCHMARK(BM_PhysicalGradientSerial)->Arg(256)->Arg(4096)->UseRealTime();
BENCHMARK(BM_PhysicalGradientParallel)->Arg(256)->Arg(4096)->UseRealTime();
BENCHMARK(BM_PowerMseGradientSerial)->Arg(256)->Arg(4096)->UseRealTime();
BENCHMARK(BM_PowerMseGradientParallel)->Arg(256)->Arg(4096)->UseRealTime();
BENCHMARK(BM_SolvePowersSerial)->UseRealTime();
BENCHMARK(BM_SolvePowersParallel)->UseRealTime();
BENCHMARK(BM_PredictPowersSerial)->UseRealTime();
BENCHMARK(BM_PredictPowersParallel)->UseRealTime();

BENCHMARK_MAIN();
