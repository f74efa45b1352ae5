#include "lcarep/lca.hpp"

#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "lcarep/rng.hpp"

using namespace lcarep;

namespace {
const LcaConfig kFlat{false, LcaWeighting::kFlatOverWindows};
const LcaConfig kPerSize{false, LcaWeighting::kUniformPerSize};
}  // namespace

TEST(LcaCount, SevenBySevenIs735) {
  EXPECT_EQ(lca_window_count(7, 7, kFlat), 735u);
}

TEST(LcaCount, TwoByTwoIsFive) {
  EXPECT_EQ(lca_window_count(2, 2, kFlat), 5u);
  EXPECT_EQ(lca_window_count(2, 2, LcaConfig{true, kFlat.weighting}), 9u);
}

TEST(LcaCount, SizeCount) {
  // 2x2: sizes 1x2, 2x1, 2x2.
  EXPECT_EQ(lca_size_count(2, 2, kFlat), 3u);
  EXPECT_EQ(lca_size_count(2, 2, LcaConfig{true, kFlat.weighting}), 4u);
  EXPECT_EQ(lca_size_count(7, 7, kFlat), 48u);  // 7*7 - 1
}

TEST(LcaAdmissibility, OneByOneExcludedIsEmpty) {
  EXPECT_THROW(lca_check_admissible(1, 1, kFlat), std::invalid_argument);
  EXPECT_NO_THROW(lca_check_admissible(1, 1, LcaConfig{true, kFlat.weighting}));
  EXPECT_NO_THROW(lca_check_admissible(1, 2, kFlat));
}

TEST(LcaForward, TwoByTwoKnownValue) {
  // Windows excluding 1x1: rows {1.5, 3.5}, columns {2, 3}, full {2.5}.
  const BasicTensor<double> map({2, 2, 1}, {1.0, 2.0, 3.0, 4.0});
  EXPECT_NEAR(lca_forward(map, kFlat)[0], 2.5, 1e-12);
  EXPECT_NEAR(lca_forward(map, kPerSize)[0], 2.5, 1e-12);
}

TEST(LcaForward, TwoByTwoModesDisagreeOnAsymmetricData) {
  const BasicTensor<double> map({1, 3, 1}, {1.0, 0.0, 0.0});
  // Flat: windows 1x2 {0.5, 0}, 1x3 {1/3} -> (0.5 + 0 + 1/3) / 3.
  EXPECT_NEAR(lca_forward(map, kFlat)[0], (0.5 + 1.0 / 3.0) / 3.0, 1e-12);
  // Per-size: mean over sizes of per-size means -> (0.25 + 1/3) / 2.
  EXPECT_NEAR(lca_forward(map, kPerSize)[0], (0.25 + 1.0 / 3.0) / 2.0, 1e-12);
}

TEST(LcaForward, MatchesBruteforce) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t H = 1 + rng.uniform_index(8);
    const std::size_t W = H == 1 ? 2 + rng.uniform_index(7)
                                 : 1 + rng.uniform_index(8);
    const std::size_t C = 1 + rng.uniform_index(5);
    BasicTensor<double> map({H, W, C});
    for (auto& v : map.values()) v = rng.uniform(-2.0, 2.0);
    for (const auto& cfg : {kFlat, kPerSize}) {
      const auto fast = lca_forward(map, cfg);
      const auto brute = lca_forward_bruteforce(map, cfg);
      for (std::size_t c = 0; c < C; ++c)
        EXPECT_NEAR(fast[c], brute[c], 1e-10);
    }
  }
}

TEST(LcaForward, ConstantMapPoolsToConstant) {
  BasicTensor<double> map({5, 4, 2});
  for (std::size_t i = 0; i < map.size(); ++i)
    map[i] = (i % 2 == 0) ? 3.25 : -1.5;
  for (const auto& cfg : {kFlat, kPerSize}) {
    const auto out = lca_forward(map, cfg);
    EXPECT_NEAR(out[0], 3.25, 1e-12);
    EXPECT_NEAR(out[1], -1.5, 1e-12);
  }
}

TEST(LcaForward, Linearity) {
  Rng rng(33);
  BasicTensor<double> x({4, 5, 3}), y({4, 5, 3});
  for (auto& v : x.values()) v = rng.uniform(-1.0, 1.0);
  for (auto& v : y.values()) v = rng.uniform(-1.0, 1.0);
  const double a = 2.5, b = -0.75;
  BasicTensor<double> z({4, 5, 3});
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = a * x[i] + b * y[i];
  for (const auto& cfg : {kFlat, kPerSize}) {
    const auto fx = lca_forward(x, cfg);
    const auto fy = lca_forward(y, cfg);
    const auto fz = lca_forward(z, cfg);
    for (std::size_t c = 0; c < 3; ++c)
      EXPECT_NEAR(fz[c], a * fx[c] + b * fy[c], 1e-12);
  }
}

TEST(LcaForward, FlipInvariance) {
  Rng rng(35);
  BasicTensor<double> x({4, 6, 2});
  for (auto& v : x.values()) v = rng.uniform(-1.0, 1.0);
  BasicTensor<double> flipped({4, 6, 2});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      for (std::size_t c = 0; c < 2; ++c)
        flipped.at(i, j, c) = x.at(i, 5 - j, c);
  for (const auto& cfg : {kFlat, kPerSize}) {
    const auto a = lca_forward(x, cfg);
    const auto b = lca_forward(flipped, cfg);
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(a[c], b[c], 1e-12);
  }
}

TEST(LcaCoefficients, SumToOne) {
  for (std::size_t H = 1; H <= 12; ++H)
    for (std::size_t W = 1; W <= 12; ++W) {
      if (H == 1 && W == 1) continue;
      for (const auto& cfg : {kFlat, kPerSize}) {
        const auto coeff = lca_coefficient_map(H, W, cfg);
        double sum = 0.0;
        for (std::size_t i = 0; i < coeff->size(); ++i) sum += (*coeff)[i];
        EXPECT_NEAR(sum, 1.0, 1e-9) << "H=" << H << " W=" << W;
      }
    }
}

TEST(LcaCoefficients, TwoByTwoCornerIsQuarter) {
  // Corner cell: (1/2 + 1/2 + 1/4) of window mass over 5 windows.
  const auto coeff = lca_coefficient_map(2, 2, kFlat);
  EXPECT_NEAR(coeff->at(0, 0), 0.25, 1e-12);
  EXPECT_NEAR(coeff->at(0, 1), 0.25, 1e-12);
  EXPECT_NEAR(coeff->at(1, 0), 0.25, 1e-12);
  EXPECT_NEAR(coeff->at(1, 1), 0.25, 1e-12);
}

TEST(LcaCoefficients, FlipSymmetric) {
  const auto coeff = lca_coefficient_map(5, 7, kFlat);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 7; ++j) {
      EXPECT_NEAR(coeff->at(i, j), coeff->at(4 - i, j), 1e-14);
      EXPECT_NEAR(coeff->at(i, j), coeff->at(i, 6 - j), 1e-14);
    }
}

TEST(LcaCoefficients, CacheReturnsSharedInstance) {
  const auto a = lca_coefficient_map(6, 6, kFlat);
  const auto b = lca_coefficient_map(6, 6, kFlat);
  EXPECT_EQ(a.get(), b.get());
  const auto c = lca_coefficient_map(6, 6, kPerSize);
  EXPECT_NE(a.get(), c.get());
}

TEST(LcaBackward, AdjointIdentity) {
  // <forward(x), g> == <x, backward(g)> for a linear operator.
  Rng rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t H = 2 + rng.uniform_index(5);
    const std::size_t W = 2 + rng.uniform_index(5);
    const std::size_t C = 1 + rng.uniform_index(4);
    BasicTensor<double> x({H, W, C});
    std::vector<double> g(C);
    for (auto& v : x.values()) v = rng.uniform(-1.0, 1.0);
    for (auto& v : g) v = rng.uniform(-1.0, 1.0);
    for (const auto& cfg : {kFlat, kPerSize}) {
      const auto fwd = lca_forward(x, cfg);
      const auto bwd = lca_backward(std::span<const double>(g), H, W, cfg);
      double lhs = 0.0, rhs = 0.0;
      for (std::size_t c = 0; c < C; ++c) lhs += fwd[c] * g[c];
      for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * bwd[i];
      EXPECT_NEAR(lhs, rhs, 1e-10);
    }
  }
}

TEST(LcaForward, RejectsNonRank3) {
  BasicTensor<double> m({2, 2}, {1.0, 2.0, 3.0, 4.0});
  EXPECT_THROW(lca_forward(m, kFlat), std::invalid_argument);
}
