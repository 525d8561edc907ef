// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include "archgen/dedup.hpp"
#include "archgen/stats.hpp"
#include "archgen/synth.hpp"

namespace {

const std::vector<std::string>& corpus() {
  static const std::vector<std::string> c = archgen::synth::corpus(4000, 11);
  return c;
}

void BM_DigestBatchSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(archgen::dedup::digest_batch_serial(corpus()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().size()));
}

void BM_DigestBatchParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(archgen::dedup::digest_batch(corpus()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().size()));
}

archgen::stats::NullSimulation null_sim() {
  archgen::stats::NullSimulation sim;
  sim.repetitions = 1000;
  return sim;
}

void BM_NullRejectionSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(archgen::stats::null_rejection_rate_serial(null_sim()));
}

void BM_NullRejectionParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(archgen::stats::null_rejection_rate(null_sim()));
}

}  // namespace

BENCHMARK(BM_DigestBatchSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_DigestBatchParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_NullRejectionSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_NullRejectionParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
