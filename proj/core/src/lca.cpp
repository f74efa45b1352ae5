#include "lcarep/lca.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <tuple>

namespace lcarep {

std::size_t lca_window_count(std::size_t height, std::size_t width,
                             const LcaConfig& cfg) {
  if (height < 1 || width < 1)
    throw std::invalid_argument("lca: H and W must be >= 1");
  const std::size_t all =
      (height * (height + 1) / 2) * (width * (width + 1) / 2);
  return cfg.include_1x1 ? all : all - height * width;
}

std::size_t lca_size_count(std::size_t height, std::size_t width,
                           const LcaConfig& cfg) {
  const std::size_t all = height * width;
  return cfg.include_1x1 ? all : all - 1;
}

void lca_check_admissible(std::size_t height, std::size_t width,
                          const LcaConfig& cfg) {
  if (lca_window_count(height, width, cfg) == 0) {
    throw std::invalid_argument(
        "lca: empty window set for " + std::to_string(height) + "x" +
        std::to_string(width) + " with the 1x1 size excluded");
  }
}

namespace {

// Number of window tops t with t <= i <= t + h - 1 and 0 <= t <= H - h.
double containing_count(std::size_t i, std::size_t h, std::size_t extent) {
  const long lo = std::max<long>(0, static_cast<long>(i) -
                                        static_cast<long>(h) + 1);
  const long hi = std::min<long>(static_cast<long>(i),
                                 static_cast<long>(extent - h));
  return hi >= lo ? static_cast<double>(hi - lo + 1) : 0.0;
}

BasicTensor<double> compute_coefficients(std::size_t H, std::size_t W,
                                         const LcaConfig& cfg) {
  // Per-axis mass factorization. For a cell (i, j), the number of h x w
  // windows containing it is cnt(i; h) * cnt(j; w), so the double sum over
  // sizes factors into a product of per-axis sums; the excluded 1x1 size
  // contributes exactly 1/(weighting denominator) and is subtracted.
  BasicTensor<double> coeff({H, W});
  const bool per_size = cfg.weighting == LcaWeighting::kUniformPerSize;
  std::vector<double> row(H), col(W);
  if (!per_size) {
    for (std::size_t i = 0; i < H; ++i) {
      double s = 0.0;
      for (std::size_t h = 1; h <= H; ++h)
        s += containing_count(i, h, H) / static_cast<double>(h);
      row[i] = s;
    }
    for (std::size_t j = 0; j < W; ++j) {
      double s = 0.0;
      for (std::size_t w = 1; w <= W; ++w)
        s += containing_count(j, w, W) / static_cast<double>(w);
      col[j] = s;
    }
    const double n = static_cast<double>(lca_window_count(H, W, cfg));
    const double one_by_one = cfg.include_1x1 ? 0.0 : 1.0;
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j)
        coeff.at(i, j) = (row[i] * col[j] - one_by_one) / n;
  } else {
    for (std::size_t i = 0; i < H; ++i) {
      double s = 0.0;
      for (std::size_t h = 1; h <= H; ++h)
        s += containing_count(i, h, H) /
             (static_cast<double>(h) * static_cast<double>(H - h + 1));
      row[i] = s;
    }
    for (std::size_t j = 0; j < W; ++j) {
      double s = 0.0;
      for (std::size_t w = 1; w <= W; ++w)
        s += containing_count(j, w, W) /
             (static_cast<double>(w) * static_cast<double>(W - w + 1));
      col[j] = s;
    }
    const double n_sizes = static_cast<double>(lca_size_count(H, W, cfg));
    const double one_by_one =
        cfg.include_1x1 ? 0.0 : 1.0 / static_cast<double>(H * W);
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j)
        coeff.at(i, j) = (row[i] * col[j] - one_by_one) / n_sizes;
  }
  return coeff;
}

using CacheKey = std::tuple<std::size_t, std::size_t, bool, int>;

std::mutex g_cache_mutex;
std::map<CacheKey, std::shared_ptr<const BasicTensor<double>>> g_cache;

}  // namespace

std::shared_ptr<const BasicTensor<double>> lca_coefficient_map(
    std::size_t height, std::size_t width, const LcaConfig& cfg) {
  lca_check_admissible(height, width, cfg);
  const CacheKey key{height, width, cfg.include_1x1,
                     static_cast<int>(cfg.weighting)};
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  auto it = g_cache.find(key);
  if (it != g_cache.end()) return it->second;
  auto coeff = std::make_shared<const BasicTensor<double>>(
      compute_coefficients(height, width, cfg));
  g_cache.emplace(key, coeff);
  return coeff;
}

}  // namespace lcarep
