#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcarep/tensor.hpp"

namespace lcarep {

// Per-channel summed-area table of an H x W x C map with a zero border row
// and column: sat(i, j, c) = sum of map[a][b][c] for a < i, b < j.
// Accumulation is 64-bit regardless of the source scalar type; prefix sums
// lose precision fast in 32-bit.
class SummedAreaTable {
 public:
  template <typename T>
  static SummedAreaTable build(const BasicTensor<T>& map) {
    if (map.rank() != 3) {
      throw std::invalid_argument("sat: expected rank-3 map (H, W, C), got rank " +
                                  std::to_string(map.rank()));
    }
    SummedAreaTable sat(map.dim(0), map.dim(1), map.dim(2));
    const std::size_t W1 = sat.w_ + 1;
    const std::size_t C = sat.c_;
    // Row-major recurrence: sat[i+1][j+1] = map[i][j] + sat[i][j+1]
    //                                      + sat[i+1][j] - sat[i][j].
    for (std::size_t i = 0; i < sat.h_; ++i) {
      for (std::size_t j = 0; j < sat.w_; ++j) {
        for (std::size_t c = 0; c < C; ++c) {
          const double up = sat.table_[((i) * W1 + (j + 1)) * C + c];
          const double left = sat.table_[((i + 1) * W1 + (j)) * C + c];
          const double diag = sat.table_[((i) * W1 + (j)) * C + c];
          sat.table_[((i + 1) * W1 + (j + 1)) * C + c] =
              static_cast<double>(map.at(i, j, c)) + up + left - diag;
        }
      }
    }
    return sat;
  }

  std::size_t height() const { return h_; }
  std::size_t width() const { return w_; }
  std::size_t channels() const { return c_; }

  double at(std::size_t i, std::size_t j, std::size_t c) const {
    return table_[(i * (w_ + 1) + j) * c_ + c];
  }

  // Per-channel sum over the window with top-left (top, left) and extent
  // h x w, via the four-corner identity.
  void window_sum(std::size_t top, std::size_t left, std::size_t h,
                  std::size_t w, std::span<double> out) const {
    check_window(top, left, h, w);
    const std::size_t W1 = w_ + 1;
    const double* a = &table_[((top + h) * W1 + (left + w)) * c_];
    const double* b = &table_[((top) * W1 + (left + w)) * c_];
    const double* c = &table_[((top + h) * W1 + (left)) * c_];
    const double* d = &table_[((top) * W1 + (left)) * c_];
    for (std::size_t ch = 0; ch < c_; ++ch) out[ch] = a[ch] - b[ch] - c[ch] + d[ch];
  }

  std::vector<double> window_sum(std::size_t top, std::size_t left,
                                 std::size_t h, std::size_t w) const {
    std::vector<double> out(c_);
    window_sum(top, left, h, w, out);
    return out;
  }

 private:
  SummedAreaTable(std::size_t h, std::size_t w, std::size_t c)
      : h_(h), w_(w), c_(c), table_((h + 1) * (w + 1) * c, 0.0) {}

  void check_window(std::size_t top, std::size_t left, std::size_t h,
                    std::size_t w) const {
    if (h < 1 || w < 1 || top + h > h_ || left + w > w_) {
      throw std::invalid_argument(
          "sat: window (top=" + std::to_string(top) + ", left=" + std::to_string(left) +
          ", h=" + std::to_string(h) + ", w=" + std::to_string(w) +
          ") out of range for " + std::to_string(h_) + "x" + std::to_string(w_));
    }
  }

  std::size_t h_, w_, c_;
  std::vector<double> table_;
};

template <typename T>
SummedAreaTable build_sat(const BasicTensor<T>& map) {
  return SummedAreaTable::build(map);
}

}  // namespace lcarep
