#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcarep {

// Dense row-major tensor, 1 to 4 axes, channel innermost for feature maps
// (H, W, C). The pipeline's universal value type. Persisted tensors are
// always the float specialization; the double specialization exists for
// shadow arithmetic in gradient checks and internal accumulation.
template <typename T>
class BasicTensor {
 public:
  BasicTensor() = default;

  explicit BasicTensor(std::vector<std::size_t> dims)
      : dims_(std::move(dims)), data_(checked_size(dims_), T(0)) {}

  BasicTensor(std::vector<std::size_t> dims, std::vector<T> values)
      : dims_(std::move(dims)), data_(std::move(values)) {
    if (data_.size() != checked_size(dims_)) {
      throw std::invalid_argument(
          "tensor: value count " + std::to_string(data_.size()) +
          " does not match dims product " + std::to_string(checked_size(dims_)));
    }
  }

  static BasicTensor full(std::vector<std::size_t> dims, T value) {
    BasicTensor t(std::move(dims));
    for (auto& v : t.data_) v = value;
    return t;
  }

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const T> values() const { return data_; }
  std::span<T> values() { return data_; }

  T operator[](std::size_t i) const { return data_[i]; }
  T& operator[](std::size_t i) { return data_[i]; }

  // Rank-2 (rows, cols).
  T at(std::size_t i, std::size_t j) const {
    return data_[i * dims_[1] + j];
  }
  T& at(std::size_t i, std::size_t j) { return data_[i * dims_[1] + j]; }

  // Rank-3 (H, W, C), channel innermost.
  T at(std::size_t i, std::size_t j, std::size_t c) const {
    return data_[(i * dims_[1] + j) * dims_[2] + c];
  }
  T& at(std::size_t i, std::size_t j, std::size_t c) {
    return data_[(i * dims_[1] + j) * dims_[2] + c];
  }

  // Rank-4, used for conv kernels (kh, kw, cin, cout).
  T at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return data_[((a * dims_[1] + b) * dims_[2] + c) * dims_[3] + d];
  }
  T& at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    return data_[((a * dims_[1] + b) * dims_[2] + c) * dims_[3] + d];
  }

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i)
      out[i] = static_cast<U>(data_[i]);
    return BasicTensor<U>(dims_, std::move(out));
  }

  bool all_finite() const {
    for (T v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  bool same_shape(const BasicTensor& other) const {
    return dims_ == other.dims_;
  }

 private:
  static std::size_t checked_size(const std::vector<std::size_t>& dims) {
    if (dims.empty() || dims.size() > 4) {
      throw std::invalid_argument("tensor: rank must be between 1 and 4, got " +
                                  std::to_string(dims.size()));
    }
    std::size_t n = 1;
    for (std::size_t d : dims) {
      if (d == 0) throw std::invalid_argument("tensor: zero-length axis");
      if (d > std::numeric_limits<std::size_t>::max() / n) {
        throw std::invalid_argument("tensor: dims product overflows");
      }
      n *= d;
    }
    return n;
  }

  std::vector<std::size_t> dims_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

// Unit-normalizes v in 64-bit arithmetic. Vectors with norm <= 1e-12 are
// returned unchanged, so the zero vector stays the zero vector.
template <typename T>
std::vector<T> l2_normalize(std::span<const T> v) {
  double sq = 0.0;
  for (T x : v) sq += static_cast<double>(x) * static_cast<double>(x);
  const double norm = std::sqrt(sq);
  std::vector<T> out(v.begin(), v.end());
  if (norm <= 1e-12) return out;
  for (auto& x : out) x = static_cast<T>(static_cast<double>(x) / norm);
  return out;
}

template <typename T>
std::vector<T> l2_normalize(const std::vector<T>& v) {
  return l2_normalize(std::span<const T>(v));
}

}  // namespace lcarep
