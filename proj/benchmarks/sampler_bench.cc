#include <benchmark/benchmark.h>

#include "lexspec/sampler.h"

namespace {

using namespace lexspec;

std::vector<ConstraintPair> constraints(std::size_t n) {
  const std::vector<std::string> langs = {"de", "en", "fi", "fr", "it", "ru"};
  std::vector<ConstraintPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = std::to_string(i);
    out.push_back({"u" + id, langs[i % 6], "v" + id, langs[(i / 6) % 6], std::nullopt, std::nullopt, "s" + id});
  }
  return out;
}

void BM_DrawLanguagePair(benchmark::State& state) {
  const PairDistribution q = compute_distribution(count_by_language_pair(constraints(10000)), 0.5);
  Rng rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(draw_language_pair(q, rng));
}
BENCHMARK(BM_DrawLanguagePair);

void BM_SampleBatch(benchmark::State& state) {
  const auto pool = constraints(10000);
  const ConstraintIndex index(pool);
  const PairDistribution q = compute_distribution(index.counts(), 0.5);
  const SamplerConfig config{0.5, static_cast<std::size_t>(state.range(0)), 0};
  Rng rng(5);
  for (auto _ : state) benchmark::DoNotOptimize(sample_batch(index, q, config, rng));
}
BENCHMARK(BM_SampleBatch)->Arg(32)->Arg(64);

}  // namespace
