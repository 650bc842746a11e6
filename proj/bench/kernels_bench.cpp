// Serial reference vs OpenMP kernels. Run with --benchmark_filter to pick one.
#include <benchmark/benchmark.h>

#include "conex/kernels.hpp"
#include "conex/rng.hpp"
#include "conex/sobol.hpp"
#include "conex/toy_model.hpp"

using namespace conex;

namespace {

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix M(rows, cols);
  for (double& v : M.data()) v = rng.uniform();
  return M;
}

template <bool Parallel>
void BM_gemm_nt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DenseMatrix U = random_matrix(n, 16, 1), W = random_matrix(256, 16, 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? kernels::parallel::gemm_nt(U, W) : kernels::serial::gemm_nt(U, W));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <bool Parallel>
void BM_nnls_rows(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DenseMatrix A = random_matrix(n, 64, 3), W = random_matrix(64, 10, 4);
  const NnlsOptions opts;
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? kernels::parallel::nnls_rows(A, W, opts)
                                      : kernels::serial::nnls_rows(A, W, opts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

// Untrained toy model; random weights are enough to time the scorer.
ToyModel bench_model() {
  ToyModel m;
  m.vocab = {"<oov>", "a", "b"};
  m.embed_weights = random_matrix(3, 16, 5);
  m.hidden_weights = random_matrix(16, 64, 6);
  m.hidden_bias.assign(64, 0.0);
  m.head_weights = random_matrix(64, 2, 7);
  m.head_bias = {0.0, 0.0};
  m.class_names = {"neg", "pos"};
  m.index_vocab();
  return m;
}

template <bool Parallel>
void BM_score_batch(benchmark::State& state) {
  ToyProvider provider(bench_model());
  const ConceptScorer scorer(provider, random_matrix(static_cast<std::size_t>(state.range(0)), 10, 8),
                             random_matrix(64, 10, 9), 1);
  const auto design = generate_design(64, 10, Sampler::qmc_sobol_sequence, MaskLaw::continuous_uniform, 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? scorer.score_batch(design.A) : scorer.score_batch_serial(design.A));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(design.A.rows()));
}

}  // namespace

BENCHMARK(BM_gemm_nt<false>)->Arg(1024)->Arg(8192);
BENCHMARK(BM_gemm_nt<true>)->Arg(1024)->Arg(8192);
BENCHMARK(BM_nnls_rows<false>)->Arg(1024)->Arg(4096);
BENCHMARK(BM_nnls_rows<true>)->Arg(1024)->Arg(4096);
BENCHMARK(BM_score_batch<false>)->Arg(500);
BENCHMARK(BM_score_batch<true>)->Arg(500);

BENCHMARK_MAIN();
