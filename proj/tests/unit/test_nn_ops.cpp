#include "lcarep/nn_ops.hpp"

#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "lcarep/rng.hpp"

using namespace lcarep;

namespace {

BasicTensor<double> delta_kernel() {
  BasicTensor<double> k({3, 3, 1, 1});
  k.at(1, 1, 0, 0) = 1.0;
  return k;
}

}  // namespace

TEST(Conv, DeltaKernelIsIdentity) {
  Rng rng(41);
  BasicTensor<double> x({5, 4, 1});
  for (auto& v : x.values()) v = rng.uniform(-1.0, 1.0);
  const std::vector<double> bias = {0.0};
  const auto out = conv2d_forward(x, delta_kernel(), std::span<const double>(bias));
  ASSERT_EQ(out.dims(), x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(out[i], x[i]);
}

TEST(Conv, AllOnesKernelCountsNeighbors) {
  BasicTensor<double> x({5, 5, 1});
  for (auto& v : x.values()) v = 1.0;
  BasicTensor<double> k({3, 3, 1, 1});
  for (auto& v : k.values()) v = 1.0;
  const std::vector<double> bias = {0.0};
  const auto out = conv2d_forward(x, k, std::span<const double>(bias));
  EXPECT_EQ(out.at(2, 2, 0), 9.0);  // interior
  EXPECT_EQ(out.at(0, 2, 0), 6.0);  // edge
  EXPECT_EQ(out.at(0, 0, 0), 4.0);  // corner
}

TEST(Conv, BiasIsAdded) {
  BasicTensor<double> x({2, 2, 1});
  const std::vector<double> bias = {1.5};
  const auto out = conv2d_forward(x, delta_kernel(), std::span<const double>(bias));
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], 1.5);
}

TEST(Conv, ShapeChecks) {
  BasicTensor<double> x({4, 4, 2});
  BasicTensor<double> k_wrong_cin({3, 3, 3, 1});
  const std::vector<double> bias = {0.0};
  EXPECT_THROW(
      conv2d_forward(x, k_wrong_cin, std::span<const double>(bias)),
      std::invalid_argument);
  BasicTensor<double> k({3, 3, 2, 2});
  const std::vector<double> bias_short = {0.0};
  EXPECT_THROW(conv2d_forward(x, k, std::span<const double>(bias_short)),
               std::invalid_argument);
}

TEST(Relu, ForwardClampsNegatives) {
  const BasicTensor<double> x({1, 1, 4}, {-1.0, 0.0, 0.5, 2.0});
  const auto out = relu_forward(x);
  EXPECT_EQ(out[0], 0.0);
  EXPECT_EQ(out[1], 0.0);
  EXPECT_EQ(out[2], 0.5);
  EXPECT_EQ(out[3], 2.0);
}

TEST(Relu, GradientAtZeroIsZero) {
  const BasicTensor<double> x({1, 1, 3}, {-1.0, 0.0, 1.0});
  const BasicTensor<double> g({1, 1, 3}, {5.0, 5.0, 5.0});
  const auto gx = relu_backward(x, g);
  EXPECT_EQ(gx[0], 0.0);
  EXPECT_EQ(gx[1], 0.0);  // the hinge itself routes no gradient
  EXPECT_EQ(gx[2], 5.0);
}

TEST(MaxPool, TwoByTwoTakesMax) {
  const BasicTensor<double> x({2, 2, 1}, {1.0, 2.0, 3.0, 4.0});
  const auto r = maxpool2_forward(x);
  ASSERT_EQ(r.output.size(), 1u);
  EXPECT_EQ(r.output[0], 4.0);

  const BasicTensor<double> g({1, 1, 1}, {7.0});
  const auto gx = maxpool2_backward(r.argmax, g, x.dims());
  EXPECT_EQ(gx.at(0, 0, 0), 0.0);
  EXPECT_EQ(gx.at(0, 1, 0), 0.0);
  EXPECT_EQ(gx.at(1, 0, 0), 0.0);
  EXPECT_EQ(gx.at(1, 1, 0), 7.0);
}

TEST(MaxPool, TiesGoToFirstCellInScanOrder) {
  const BasicTensor<double> x({2, 2, 1}, {1.0, 1.0, 1.0, 1.0});
  const auto r = maxpool2_forward(x);
  const BasicTensor<double> g({1, 1, 1}, {1.0});
  const auto gx = maxpool2_backward(r.argmax, g, x.dims());
  EXPECT_EQ(gx.at(0, 0, 0), 1.0);  // top-left wins the tie
  EXPECT_EQ(gx.at(0, 1, 0), 0.0);
  EXPECT_EQ(gx.at(1, 0, 0), 0.0);
  EXPECT_EQ(gx.at(1, 1, 0), 0.0);
}

TEST(MaxPool, ChannelsPoolIndependently) {
  Rng rng(43);
  BasicTensor<double> x({4, 4, 3});
  for (auto& v : x.values()) v = rng.uniform(-1.0, 1.0);
  const auto r = maxpool2_forward(x);
  ASSERT_EQ(r.output.dims(), (std::vector<std::size_t>{2, 2, 3}));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t c = 0; c < 3; ++c) {
        double best = -1e9;
        for (std::size_t di = 0; di < 2; ++di)
          for (std::size_t dj = 0; dj < 2; ++dj)
            best = std::max(best, x.at(2 * i + di, 2 * j + dj, c));
        EXPECT_EQ(r.output.at(i, j, c), best);
      }
}

TEST(MaxPool, OddSidesRejected) {
  BasicTensor<double> x({3, 4, 1});
  EXPECT_THROW(maxpool2_forward(x), std::invalid_argument);
  BasicTensor<double> y({4, 5, 1});
  EXPECT_THROW(maxpool2_forward(y), std::invalid_argument);
}

TEST(ConvBackward, ScatterGatherConsistency) {
  // Gradient of sum(output) w.r.t. an all-ones input against hand counts:
  // each kernel tap contributes once per valid placement.
  BasicTensor<double> x({4, 4, 1});
  for (auto& v : x.values()) v = 1.0;
  BasicTensor<double> k({3, 3, 1, 1});
  for (auto& v : k.values()) v = 1.0;
  BasicTensor<double> g({4, 4, 1});
  for (auto& v : g.values()) v = 1.0;
  const auto grads = conv2d_backward(x, k, g);
  // d(sum)/d(x[i][j]) equals the number of windows covering (i, j).
  EXPECT_EQ(grads.input.at(0, 0, 0), 4.0);
  EXPECT_EQ(grads.input.at(1, 1, 0), 9.0);
  EXPECT_EQ(grads.input.at(0, 1, 0), 6.0);
  // d(sum)/d(kernel tap) equals the sum of inputs it touches: 16 placements
  // minus the padding rows/columns it falls off.
  EXPECT_EQ(grads.kernel.at(1, 1, 0, 0), 16.0);
  EXPECT_EQ(grads.kernel.at(0, 0, 0, 0), 9.0);
  EXPECT_EQ(grads.kernel.at(0, 1, 0, 0), 12.0);
  EXPECT_EQ(grads.bias[0], 16.0);
}
