#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

#include "photonlab/kernels/correlate.hpp"
#include "photonlab/kernels/defocus.hpp"

using namespace photonlab;

namespace {

std::vector<std::uint64_t> arrivals(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> u(0, 1'000'000'000'000ULL);
  std::vector<std::uint64_t> t(n);
  for (auto& x : t) x = u(rng);
  std::sort(t.begin(), t.end());
  return t;
}

template <class F>
void run_correlate(benchmark::State& state, F kernel) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = arrivals(n, 1), b = arrivals(n, 2);
  for (auto _ : state) {
    // dense enough that each start sees a few partners inside ±12.8 ns
    auto h = kernel(a, b, 256, 50);
    benchmark::DoNotOptimize(h.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_correlate_serial(benchmark::State& s) { run_correlate(s, kernels::cross_correlate_serial); }
void BM_correlate_omp(benchmark::State& s) { run_correlate(s, kernels::cross_correlate_omp); }

void BM_defocus_serial(benchmark::State& state) {
  OpticsConfig o;
  for (auto _ : state) {
    auto b = kernels::defocus_basis_serial(o, 500.0, 64);
    benchmark::DoNotOptimize(b.m[0].data());
  }
}

void BM_defocus_omp(benchmark::State& state) {
  OpticsConfig o;
  for (auto _ : state) {
    auto b = kernels::defocus_basis_omp(o, 500.0, 64);
    benchmark::DoNotOptimize(b.m[0].data());
  }
}

}  // namespace

BENCHMARK(BM_correlate_serial)->Arg(100'000)->Arg(1'000'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_correlate_omp)->Arg(100'000)->Arg(1'000'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_defocus_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_defocus_omp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
