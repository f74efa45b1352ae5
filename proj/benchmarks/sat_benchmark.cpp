#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "lcarep/rng.hpp"
#include "lcarep/sat.hpp"
#include "lcarep/tensor.hpp"

namespace {

lcarep::BasicTensor<float> random_map(std::size_t side, std::size_t channels) {
  lcarep::BasicTensor<float> map({side, side, channels});
  lcarep::Rng rng(7);
  for (auto& v : map.values()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return map;
}

void BM_SatBuild(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto channels = static_cast<std::size_t>(state.range(1));
  const auto map = random_map(side, channels);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lcarep::SummedAreaTable::build(map));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<int64_t>(map.size()));
}
BENCHMARK(BM_SatBuild)->Args({7, 64})->Args({14, 256})->Args({28, 256});

// Every admissible window (h*w > 1) of the map, read back through the
// four-corner identity. This is the access pattern of the pooling layer.
void BM_SatWindowSums(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto channels = static_cast<std::size_t>(state.range(1));
  const auto sat = lcarep::SummedAreaTable::build(random_map(side, channels));
  std::vector<double> sums(channels);
  std::int64_t windows = 0;
  for (auto _ : state) {
    for (std::size_t h = 1; h <= side; ++h) {
      for (std::size_t w = 1; w <= side; ++w) {
        if (h * w == 1) continue;
        for (std::size_t top = 0; top + h <= side; ++top) {
          for (std::size_t left = 0; left + w <= side; ++left) {
            sat.window_sum(top, left, h, w, sums);
            ++windows;
          }
        }
      }
    }
    benchmark::DoNotOptimize(sums.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(windows);
}
BENCHMARK(BM_SatWindowSums)->Args({7, 64})->Args({14, 256});

}  // namespace

BENCHMARK_MAIN();
