#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcarep/sat.hpp"
#include "lcarep/tensor.hpp"

namespace lcarep {

// Local Concepts Accumulation pooling: the input feature map is average
// pooled over every rectangular window size and position, the 1x1 size
// excluded by default, and the per-window means are averaged into one
// vector per channel.
//
// "Larger than 1x1" is read as every (h, w) with h*w > 1, so 1x2 and 2x1
// strips are in; only the 1x1 size is out. include_1x1 is the escape hatch.
//
// Two averaging modes are provided because the source material can be read
// either way:
//   kFlatOverWindows  - every window counts once in the final average.
//   kUniformPerSize   - mean over sizes of the mean over positions.
enum class LcaWeighting { kFlatOverWindows, kUniformPerSize };

struct LcaConfig {
  bool include_1x1 = false;
  LcaWeighting weighting = LcaWeighting::kFlatOverWindows;
};

// Number of (size, position) window instances:
// [H(H+1)/2] * [W(W+1)/2], minus H*W when the 1x1 size is excluded.
std::size_t lca_window_count(std::size_t height, std::size_t width,
                             const LcaConfig& cfg);

// Number of admissible window sizes.
std::size_t lca_size_count(std::size_t height, std::size_t width,
                           const LcaConfig& cfg);

// Throws std::invalid_argument when the window set is empty (H = W = 1 with
// include_1x1 = false). Inputs like that must never silently pool.
void lca_check_admissible(std::size_t height, std::size_t width,
                          const LcaConfig& cfg);

// The layer is linear, so it has a closed form: out = sum coeff[i][j] *
// map[i][j][.], with coeff[i][j] the total weight-over-area mass of the
// admissible windows containing cell (i, j). Sum of all coefficients is 1.
// Maps are computed once per (H, W, cfg) and shared; lookup is thread-safe.
std::shared_ptr<const BasicTensor<double>> lca_coefficient_map(
    std::size_t height, std::size_t width, const LcaConfig& cfg);

// Fast forward path: one SAT build plus O(C) per window.
template <typename T>
std::vector<T> lca_forward(const BasicTensor<T>& map, const LcaConfig& cfg) {
  if (map.rank() != 3)
    throw std::invalid_argument("lca_forward: expected rank-3 map (H, W, C)");
  const std::size_t H = map.dim(0), W = map.dim(1), C = map.dim(2);
  lca_check_admissible(H, W, cfg);

  const SummedAreaTable sat = SummedAreaTable::build(map);
  std::vector<double> acc(C, 0.0);
  std::vector<double> ws(C);
  std::vector<double> size_acc;
  const bool per_size = cfg.weighting == LcaWeighting::kUniformPerSize;
  if (per_size) size_acc.resize(C);

  for (std::size_t h = 1; h <= H; ++h) {
    for (std::size_t w = 1; w <= W; ++w) {
      if (h * w == 1 && !cfg.include_1x1) continue;
      const double inv_area = 1.0 / static_cast<double>(h * w);
      if (per_size) std::fill(size_acc.begin(), size_acc.end(), 0.0);
      for (std::size_t top = 0; top + h <= H; ++top) {
        for (std::size_t left = 0; left + w <= W; ++left) {
          sat.window_sum(top, left, h, w, ws);
          double* dst = per_size ? size_acc.data() : acc.data();
          for (std::size_t c = 0; c < C; ++c) dst[c] += ws[c] * inv_area;
        }
      }
      if (per_size) {
        const double inv_pos =
            1.0 / static_cast<double>((H - h + 1) * (W - w + 1));
        for (std::size_t c = 0; c < C; ++c) acc[c] += size_acc[c] * inv_pos;
      }
    }
  }

  const double denom = per_size
                           ? static_cast<double>(lca_size_count(H, W, cfg))
                           : static_cast<double>(lca_window_count(H, W, cfg));
  std::vector<T> out(C);
  for (std::size_t c = 0; c < C; ++c) out[c] = static_cast<T>(acc[c] / denom);
  return out;
}

// Oracle path: literal enumeration of every window with direct summation.
// Kept deliberately naive; lca_forward is tested against it.
template <typename T>
std::vector<T> lca_forward_bruteforce(const BasicTensor<T>& map,
                                      const LcaConfig& cfg) {
  if (map.rank() != 3)
    throw std::invalid_argument("lca_forward: expected rank-3 map (H, W, C)");
  const std::size_t H = map.dim(0), W = map.dim(1), C = map.dim(2);
  lca_check_admissible(H, W, cfg);

  const bool per_size = cfg.weighting == LcaWeighting::kUniformPerSize;
  std::vector<double> acc(C, 0.0);
  std::vector<double> size_acc(C);
  for (std::size_t h = 1; h <= H; ++h) {
    for (std::size_t w = 1; w <= W; ++w) {
      if (h * w == 1 && !cfg.include_1x1) continue;
      std::fill(size_acc.begin(), size_acc.end(), 0.0);
      for (std::size_t top = 0; top + h <= H; ++top) {
        for (std::size_t left = 0; left + w <= W; ++left) {
          for (std::size_t c = 0; c < C; ++c) {
            double sum = 0.0;
            for (std::size_t i = top; i < top + h; ++i)
              for (std::size_t j = left; j < left + w; ++j)
                sum += static_cast<double>(map.at(i, j, c));
            size_acc[c] += sum / static_cast<double>(h * w);
          }
        }
      }
      if (per_size) {
        const double inv_pos =
            1.0 / static_cast<double>((H - h + 1) * (W - w + 1));
        for (std::size_t c = 0; c < C; ++c) acc[c] += size_acc[c] * inv_pos;
      } else {
        for (std::size_t c = 0; c < C; ++c) acc[c] += size_acc[c];
      }
    }
  }
  const double denom = per_size
                           ? static_cast<double>(lca_size_count(H, W, cfg))
                           : static_cast<double>(lca_window_count(H, W, cfg));
  std::vector<T> out(C);
  for (std::size_t c = 0; c < C; ++c) out[c] = static_cast<T>(acc[c] / denom);
  return out;
}

// Adjoint of the (linear) layer: grad_in[i][j][c] = coeff[i][j] * grad_out[c].
template <typename T>
BasicTensor<T> lca_backward(std::span<const T> grad_out, std::size_t height,
                            std::size_t width, const LcaConfig& cfg) {
  lca_check_admissible(height, width, cfg);
  const auto coeff = lca_coefficient_map(height, width, cfg);
  const std::size_t C = grad_out.size();
  BasicTensor<T> grad_in({height, width, C});
  for (std::size_t i = 0; i < height; ++i)
    for (std::size_t j = 0; j < width; ++j) {
      const double w = coeff->at(i, j);
      for (std::size_t c = 0; c < C; ++c)
        grad_in.at(i, j, c) =
            static_cast<T>(w * static_cast<double>(grad_out[c]));
    }
  return grad_in;
}

}  // namespace lcarep
