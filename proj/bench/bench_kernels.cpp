#include <benchmark/benchmark.h>

#include <random>

#include "derd/codec.hpp"
#include "derd/harness.hpp"
#include "derd/kernels.hpp"
#include "derd/transform.hpp"

using namespace derd;

namespace {

std::vector<std::uint8_t> randomSamples(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> v(n);
  for (auto& s : v) s = static_cast<std::uint8_t>(rng());
  return v;
}

std::vector<FeatureCounts> randomCounts(std::size_t n) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> d(0, 10000);
  std::vector<FeatureCounts> v(n);
  for (auto& c : v) {
    c.n_slice = 1;
    for (auto& row : c.n_mode_size)
      for (auto& x : row) x = d(rng);
    for (auto& row : c.n_comp_size)
      for (auto& x : row) x = d(rng);
    c.n_g1 = d(rng);
    c.n_coeff = c.n_g1 + d(rng);
    c.sum_log2_val = static_cast<double>(c.n_g1);
    c.n_csbf = d(rng);
  }
  return v;
}

void BM_Sse(benchmark::State& st) {
  const auto a = randomSamples(static_cast<std::size_t>(st.range(0)), 1), b = randomSamples(a.size(), 2);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::sse(a, b));
  st.SetBytesProcessed(st.iterations() * st.range(0) * 2);
}

void BM_SseSerial(benchmark::State& st) {
  const auto a = randomSamples(static_cast<std::size_t>(st.range(0)), 1), b = randomSamples(a.size(), 2);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::sseSerial(a, b));
  st.SetBytesProcessed(st.iterations() * st.range(0) * 2);
}

void BM_EstimateBatch(benchmark::State& st) {
  const auto c = randomCounts(static_cast<std::size_t>(st.range(0)));
  const auto p = syntheticDefaultProfile();
  for (auto _ : st) benchmark::DoNotOptimize(kernels::estimateBatch(p, c));
}

void BM_EstimateBatchSerial(benchmark::State& st) {
  const auto c = randomCounts(static_cast<std::size_t>(st.range(0)));
  const auto p = syntheticDefaultProfile();
  for (auto _ : st) benchmark::DoNotOptimize(kernels::estimateBatchSerial(p, c));
}

void BM_Transform(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  std::mt19937 rng(3);
  std::vector<std::int32_t> r(static_cast<std::size_t>(n * n)), c(r.size()), back(r.size());
  for (auto& v : r) v = static_cast<std::int32_t>(rng() % 511) - 255;
  for (auto _ : st) {
    transform::forward(r, c, n);
    transform::inverse(c, back, n);
    benchmark::DoNotOptimize(back.data());
  }
}

void BM_EncodeFrame(benchmark::State& st) {
  const Frame f = generatePattern(PatternKind::Text, 416, 240, 5);
  EncoderConfig cfg;
  cfg.qp = static_cast<int>(st.range(0));
  cfg.objective = Objective::derdo(cfg.qp, syntheticDefaultProfile());
  for (auto _ : st) benchmark::DoNotOptimize(encodeSequence(std::span(&f, 1), cfg).distortion);
  st.SetItemsProcessed(st.iterations() * 416 * 240);
}

}  // namespace

BENCHMARK(BM_Sse)->Arg(1 << 16)->Arg(1 << 22);
BENCHMARK(BM_SseSerial)->Arg(1 << 16)->Arg(1 << 22);
BENCHMARK(BM_EstimateBatch)->Arg(1000)->Arg(100000);
BENCHMARK(BM_EstimateBatchSerial)->Arg(1000)->Arg(100000);
BENCHMARK(BM_Transform)->Arg(4)->Arg(8)->Arg(16)->Arg(32);
BENCHMARK(BM_EncodeFrame)->Arg(25)->Arg(45)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
