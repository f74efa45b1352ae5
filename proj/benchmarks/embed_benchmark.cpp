#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "lcarep/backbone.hpp"
#include "lcarep/nn_ops.hpp"
#include "lcarep/rng.hpp"
#include "lcarep/tensor.hpp"

namespace {

lcarep::BasicTensor<float> random_image(std::size_t side,
                                        std::size_t channels) {
  lcarep::BasicTensor<float> img({side, side, channels});
  lcarep::Rng rng(3);
  for (auto& v : img.values()) v = static_cast<float>(rng.uniform());
  return img;
}

void BM_Conv2dForward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto cin = static_cast<std::size_t>(state.range(1));
  const auto cout = static_cast<std::size_t>(state.range(2));
  const auto input = random_image(side, cin);
  lcarep::BasicTensor<float> kernel({3, 3, cin, cout});
  lcarep::Rng rng(5);
  for (auto& v : kernel.values())
    v = static_cast<float>(rng.uniform(-0.1, 0.1));
  const std::vector<float> bias(cout, 0.0f);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lcarep::conv2d_forward<float>(input, kernel, bias));
  }
  // 3x3 stride-1 cross-correlation: one MAC per tap.
  state.SetItemsProcessed(state.iterations() *
                          static_cast<int64_t>(side * side * 9 * cin * cout));
}
BENCHMARK(BM_Conv2dForward)
    ->Args({64, 3, 16})
    ->Args({32, 16, 32})
    ->Args({16, 32, 64});

// Image -> conv stack -> pooled, normalized embedding. This is the unit of
// work behind every training step and every inference call.
void BM_EmbedImage(benchmark::State& state) {
  lcarep::BackboneConfig config;
  config.input_size = static_cast<std::size_t>(state.range(0));
  const auto ckpt = lcarep::init_checkpoint(config, 1);
  const auto image = random_image(config.input_size, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lcarep::embed_image(ckpt, image));
  }
}
BENCHMARK(BM_EmbedImage)->Arg(32)->Arg(64);

void BM_EmbedImageWithTrace(benchmark::State& state) {
  lcarep::BackboneConfig config;
  config.input_size = static_cast<std::size_t>(state.range(0));
  const auto ckpt = lcarep::init_checkpoint(config, 1);
  const auto image = random_image(config.input_size, 3);
  for (auto _ : state) {
    lcarep::ForwardTrace<float> trace;
    benchmark::DoNotOptimize(lcarep::embed_image(ckpt, image, &trace));
  }
}
BENCHMARK(BM_EmbedImageWithTrace)->Arg(32)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
