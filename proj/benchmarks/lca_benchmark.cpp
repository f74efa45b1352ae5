#include <benchmark/benchmark.h>

#include <cstdint>

#include "lcarep/lca.hpp"
#include "lcarep/rng.hpp"
#include "lcarep/tensor.hpp"

namespace {

lcarep::BasicTensor<float> random_map(std::size_t side, std::size_t channels) {
  lcarep::BasicTensor<float> map({side, side, channels});
  lcarep::Rng rng(11);
  for (auto& v : map.values()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return map;
}

// SAT-backed pooling: one table build, O(C) per window.
void BM_LcaForward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto channels = static_cast<std::size_t>(state.range(1));
  const auto map = random_map(side, channels);
  const lcarep::LcaConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lcarep::lca_forward(map, cfg));
  }
  state.SetItemsProcessed(
      state.iterations() *
      static_cast<int64_t>(lcarep::lca_window_count(side, side, cfg)));
}
BENCHMARK(BM_LcaForward)->Args({7, 64})->Args({14, 256})->Args({28, 256});

// Reference path: every window walked cell by cell. Kept as the yardstick
// the fast path is measured against.
void BM_LcaForwardBruteForce(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto channels = static_cast<std::size_t>(state.range(1));
  const auto map = random_map(side, channels);
  const lcarep::LcaConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lcarep::lca_forward_bruteforce(map, cfg));
  }
  state.SetItemsProcessed(
      state.iterations() *
      static_cast<int64_t>(lcarep::lca_window_count(side, side, cfg)));
}
BENCHMARK(BM_LcaForwardBruteForce)->Args({7, 64})->Args({14, 256});

// Steady-state lookup of the shared coefficient map — the call the backward
// pass makes every step. First build is amortized away by the cache.
void BM_LcaCoefficientMapLookup(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const lcarep::LcaConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lcarep::lca_coefficient_map(side, side, cfg));
  }
}
BENCHMARK(BM_LcaCoefficientMapLookup)->Arg(14)->Arg(28);

}  // namespace

BENCHMARK_MAIN();
