#include <benchmark/benchmark.h>

#include "lexspec/evalsuite.h"
#include "lexspec/rng.h"
#include "lexspec/synthetic.h"

namespace {

using namespace lexspec;

EmbeddingMatrix random_matrix(std::size_t rows, std::size_t dim, Rng& rng) {
  EmbeddingMatrix m{rows, dim, std::vector<double>(rows * dim)};
  for (double& x : m.data) x = rng.normal();
  return m;
}

void BM_MeanReciprocalRank(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const EmbeddingMatrix q = random_matrix(n, 48, rng), c = random_matrix(n, 48, rng);
  std::vector<std::vector<std::size_t>> golds(n);
  for (std::size_t i = 0; i < n; ++i) golds[i] = {i};
  for (auto _ : state) benchmark::DoNotOptimize(mean_reciprocal_rank(q, c, golds));
}
BENCHMARK(BM_MeanReciprocalRank)->Arg(100)->Arg(1000);

void BM_BliMrrSynthetic(benchmark::State& state) {
  const SyntheticBenchmark bench = make_synthetic_benchmark(SyntheticConfig{});
  const EncoderModel model = bench.make_model(EncoderConfig{}, 7);
  for (auto _ : state) benchmark::DoNotOptimize(bli_mrr(model, model.num_layers(), bench.test));
}
BENCHMARK(BM_BliMrrSynthetic);

}  // namespace
