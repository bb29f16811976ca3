// Serial reference vs OpenMP kernels on desk-scale inputs.
#include <benchmark/benchmark.h>

#include "hampdti/hetgraph/sparse.hpp"
#include "hampdti/kernels/kernels.hpp"
#include "hampdti/random.hpp"

using namespace hampdti;

namespace {

Matrix random_dense(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

SparseMatrix random_sparse(std::size_t n, double density, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (rng.bernoulli(density)) t.push_back({i, j, 1.0});
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

template <bool Parallel>
void BM_gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_dense(n, n, 1), b = random_dense(n, 128, 2);
  Matrix out;
  for (auto _ : state) {
    if constexpr (Parallel) kernels::gemm(a, b, out);
    else kernels::serial::gemm(a, b, out);
    benchmark::DoNotOptimize(out.data.data());
  }
}

template <bool Parallel>
void BM_csr_dense(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const SparseMatrix a = random_sparse(n, 0.01, 3);
  const Matrix x = random_dense(n, 128, 4);
  Matrix out;
  for (auto _ : state) {
    if constexpr (Parallel) kernels::csr_dense(a.view(), x, out);
    else kernels::serial::csr_dense(a.view(), x, out);
    benchmark::DoNotOptimize(out.data.data());
  }
}

template <bool Parallel>
void BM_csr_csr(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const SparseMatrix a = random_sparse(n, 0.005, 5);
  for (auto _ : state) {
    auto out = Parallel ? kernels::csr_csr(a.view(), a.view()) : kernels::serial::csr_csr(a.view(), a.view());
    benchmark::DoNotOptimize(out.values.data());
  }
}

}  // namespace

BENCHMARK(BM_gemm<false>)->Arg(256)->Arg(512);
BENCHMARK(BM_gemm<true>)->Arg(256)->Arg(512);
BENCHMARK(BM_csr_dense<false>)->Arg(2000)->Arg(8000);
BENCHMARK(BM_csr_dense<true>)->Arg(2000)->Arg(8000);
BENCHMARK(BM_csr_csr<false>)->Arg(2000)->Arg(8000);
BENCHMARK(BM_csr_csr<true>)->Arg(2000)->Arg(8000);

BENCHMARK_MAIN();
