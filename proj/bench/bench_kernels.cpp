// Serial reference vs OpenMP kernels. Run with --benchmark_filter=... to pick a
// kernel; set OMP_NUM_THREADS to vary the parallel width.

#include <benchmark/benchmark.h>

#include "hgb/kernels.hpp"
#include "hgb/rng.hpp"

namespace {

using hgb::DenseMatrix;
using hgb::Index;
namespace k = hgb::kernels;

DenseMatrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  hgb::Rng rng(seed);
  DenseMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

std::vector<Index> random_index(std::size_t n, std::size_t bound, std::uint64_t seed) {
  hgb::Rng rng(seed);
  std::vector<Index> v(n);
  for (auto& x : v) x = rng.below(bound);
  return v;
}

template <bool Parallel>
void BM_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DenseMatrix a = random_matrix(n, 64, 1), b = random_matrix(64, 64, 2);
  for (auto _ : state) {
    auto c = Parallel ? k::parallel::matmul(a, b) : k::serial::matmul(a, b);
    benchmark::DoNotOptimize(c);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

template <bool Parallel>
void BM_matmul_tn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DenseMatrix a = random_matrix(n, 64, 1), b = random_matrix(n, 64, 2);
  for (auto _ : state) {
    auto c = Parallel ? k::parallel::matmul_tn(a, b) : k::serial::matmul_tn(a, b);
    benchmark::DoNotOptimize(c);
  }
}

// One edge list with 8 edges per node: gather by source, scatter to destination.
template <bool Parallel>
void BM_gather_scatter(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DenseMatrix h = random_matrix(n, 64, 3);
  const auto src = random_index(8 * n, n, 4), dst = random_index(8 * n, n, 5);
  for (auto _ : state) {
    auto msg = Parallel ? k::parallel::gather_rows(h, src) : k::serial::gather_rows(h, src);
    auto out = Parallel ? k::parallel::scatter_rows(msg, dst, n) : k::serial::scatter_rows(msg, dst, n);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(8 * n));
}

template <bool Parallel>
void BM_segment_softmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DenseMatrix scores = random_matrix(8 * n, 8, 6);
  const auto dst = random_index(8 * n, n, 7);
  for (auto _ : state) {
    auto a = Parallel ? k::parallel::segment_softmax(scores, dst, n) : k::serial::segment_softmax(scores, dst, n);
    benchmark::DoNotOptimize(a);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(8 * n));
}

}  // namespace

BENCHMARK(BM_matmul<false>)->Name("matmul/serial")->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_matmul<true>)->Name("matmul/omp")->Arg(1 << 12)->Arg(1 << 15)->UseRealTime();
BENCHMARK(BM_matmul_tn<false>)->Name("matmul_tn/serial")->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_matmul_tn<true>)->Name("matmul_tn/omp")->Arg(1 << 12)->Arg(1 << 15)->UseRealTime();
BENCHMARK(BM_gather_scatter<false>)->Name("gather_scatter/serial")->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_gather_scatter<true>)->Name("gather_scatter/omp")->Arg(1 << 12)->Arg(1 << 15)->UseRealTime();
BENCHMARK(BM_segment_softmax<false>)->Name("segment_softmax/serial")->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK(BM_segment_softmax<true>)->Name("segment_softmax/omp")->Arg(1 << 12)->Arg(1 << 15)->UseRealTime();

BENCHMARK_MAIN();
