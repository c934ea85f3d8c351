// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "sea/kernels.hpp"
#include "sea/rng.hpp"

namespace {

sea::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  sea::Rng rng(seed);
  sea::Matrix m(rows, cols);
  for (auto& x : m.data()) x = rng.normal();
  return m;
}

template <sea::Matrix (*Fn)(const sea::Matrix&, const sea::Matrix&)>
void bm_binary(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, 64, 1);
  const auto b = random_matrix(n, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(a, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * 64));
}

template <sea::Matrix (*Fn)(const sea::Matrix&)>
void bm_unary(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(a));
}

}  // namespace

BENCHMARK(bm_binary<sea::kernels::serial::cosine>)->Name("cosine/serial")->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(bm_binary<sea::kernels::omp::cosine>)->Name("cosine/omp")->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(bm_binary<sea::kernels::serial::gemm_nt>)->Name("gemm_nt/serial")->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(bm_binary<sea::kernels::omp::gemm_nt>)->Name("gemm_nt/omp")->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(bm_unary<sea::kernels::serial::log_softmax_rows>)->Name("log_softmax/serial")->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(bm_unary<sea::kernels::omp::log_softmax_rows>)->Name("log_softmax/omp")->RangeMultiplier(4)->Range(64, 1024);

BENCHMARK_MAIN();
