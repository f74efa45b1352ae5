#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "lcarep/tensor.hpp"

namespace lcarep {

// 3x3, stride 1, zero padding 1 cross-correlation plus bias.
// input: H x W x Cin, kernel: 3 x 3 x Cin x Cout, bias: Cout.
// Sums accumulate in 64-bit.
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input,
                              const BasicTensor<T>& kernel,
                              std::span<const T> bias) {
  if (input.rank() != 3 || kernel.rank() != 4)
    throw std::invalid_argument("conv2d: input must be rank 3, kernel rank 4");
  if (kernel.dim(0) != 3 || kernel.dim(1) != 3 ||
      kernel.dim(2) != input.dim(2) || kernel.dim(3) != bias.size())
    throw std::invalid_argument("conv2d: kernel/bias shape mismatch");
  const std::size_t H = input.dim(0), W = input.dim(1);
  const std::size_t Cin = input.dim(2), Cout = kernel.dim(3);

  BasicTensor<T> out({H, W, Cout});
  std::vector<double> acc(Cout);
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      for (std::size_t co = 0; co < Cout; ++co)
        acc[co] = static_cast<double>(bias[co]);
      for (std::size_t di = 0; di < 3; ++di) {
        const std::size_t a = i + di;
        if (a < 1 || a > H) continue;  // zero padding row
        for (std::size_t dj = 0; dj < 3; ++dj) {
          const std::size_t b = j + dj;
          if (b < 1 || b > W) continue;
          for (std::size_t ci = 0; ci < Cin; ++ci) {
            const double x =
                static_cast<double>(input.at(a - 1, b - 1, ci));
            if (x == 0.0) continue;
            for (std::size_t co = 0; co < Cout; ++co)
              acc[co] += x * static_cast<double>(kernel.at(di, dj, ci, co));
          }
        }
      }
      for (std::size_t co = 0; co < Cout; ++co)
        out.at(i, j, co) = static_cast<T>(acc[co]);
    }
  }
  return out;
}

template <typename T>
struct Conv2dGrads {
  BasicTensor<T> input;
  BasicTensor<T> kernel;
  std::vector<T> bias;
};

// Exact adjoints of conv2d_forward.
template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& input,
                               const BasicTensor<T>& kernel,
                               const BasicTensor<T>& grad_out) {
  if (input.rank() != 3 || kernel.rank() != 4 || grad_out.rank() != 3)
    throw std::invalid_argument("conv2d_backward: bad ranks");
  const std::size_t H = input.dim(0), W = input.dim(1);
  const std::size_t Cin = input.dim(2), Cout = kernel.dim(3);
  if (kernel.dim(0) != 3 || kernel.dim(1) != 3 || kernel.dim(2) != Cin ||
      grad_out.dim(0) != H || grad_out.dim(1) != W || grad_out.dim(2) != Cout)
    throw std::invalid_argument("conv2d_backward: shape mismatch");

  std::vector<double> gin(H * W * Cin, 0.0);
  std::vector<double> gker(9 * Cin * Cout, 0.0);
  std::vector<double> gbias(Cout, 0.0);

  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      for (std::size_t co = 0; co < Cout; ++co)
        gbias[co] += static_cast<double>(grad_out.at(i, j, co));
      for (std::size_t di = 0; di < 3; ++di) {
        const std::size_t a = i + di;
        if (a < 1 || a > H) continue;
        for (std::size_t dj = 0; dj < 3; ++dj) {
          const std::size_t b = j + dj;
          if (b < 1 || b > W) continue;
          for (std::size_t ci = 0; ci < Cin; ++ci) {
            const double x = static_cast<double>(input.at(a - 1, b - 1, ci));
            double gx = 0.0;
            const std::size_t kbase = ((di * 3 + dj) * Cin + ci) * Cout;
            const std::size_t gbase = (i * W + j) * Cout;
            for (std::size_t co = 0; co < Cout; ++co) {
              const double g = static_cast<double>(grad_out[gbase + co]);
              gx += g * static_cast<double>(kernel[kbase + co]);
              gker[kbase + co] += g * x;
            }
            gin[((a - 1) * W + (b - 1)) * Cin + ci] += gx;
          }
        }
      }
    }
  }

  Conv2dGrads<T> grads{BasicTensor<T>({H, W, Cin}),
                       BasicTensor<T>({3, 3, Cin, Cout}),
                       std::vector<T>(Cout)};
  for (std::size_t k = 0; k < gin.size(); ++k)
    grads.input[k] = static_cast<T>(gin[k]);
  for (std::size_t k = 0; k < gker.size(); ++k)
    grads.kernel[k] = static_cast<T>(gker[k]);
  for (std::size_t k = 0; k < gbias.size(); ++k)
    grads.bias[k] = static_cast<T>(gbias[k]);
  return grads;
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input) {
  BasicTensor<T> out(input.dims());
  for (std::size_t k = 0; k < input.size(); ++k)
    out[k] = input[k] > T(0) ? input[k] : T(0);
  return out;
}

// Mask by input > 0; the gradient at exactly 0 is 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input,
                             const BasicTensor<T>& grad_out) {
  if (!input.same_shape(grad_out))
    throw std::invalid_argument("relu_backward: shape mismatch");
  BasicTensor<T> grad_in(input.dims());
  for (std::size_t k = 0; k < input.size(); ++k)
    grad_in[k] = input[k] > T(0) ? grad_out[k] : T(0);
  return grad_in;
}

template <typename T>
struct MaxPoolResult {
  BasicTensor<T> output;               // H/2 x W/2 x C
  std::vector<std::uint32_t> argmax;   // flat input index per output cell
};

// Non-overlapping 2x2 max pool; even side lengths required. Ties go to the
// first tile cell in row-major order.
template <typename T>
MaxPoolResult<T> maxpool2_forward(const BasicTensor<T>& input) {
  if (input.rank() != 3)
    throw std::invalid_argument("maxpool2: expected rank-3 input");
  const std::size_t H = input.dim(0), W = input.dim(1), C = input.dim(2);
  if (H % 2 != 0 || W % 2 != 0)
    throw std::invalid_argument("maxpool2: side lengths must be even, got " +
                                std::to_string(H) + "x" + std::to_string(W));
  MaxPoolResult<T> r{BasicTensor<T>({H / 2, W / 2, C}),
                     std::vector<std::uint32_t>(H / 2 * W / 2 * C)};
  std::size_t o = 0;
  for (std::size_t i = 0; i < H; i += 2) {
    for (std::size_t j = 0; j < W; j += 2) {
      for (std::size_t c = 0; c < C; ++c, ++o) {
        T best = input.at(i, j, c);
        std::size_t best_idx = (i * W + j) * C + c;
        const std::size_t cand[3][2] = {{i, j + 1}, {i + 1, j}, {i + 1, j + 1}};
        for (const auto& pq : cand) {
          const T v = input.at(pq[0], pq[1], c);
          if (v > best) {
            best = v;
            best_idx = (pq[0] * W + pq[1]) * C + c;
          }
        }
        r.output[o] = best;
        r.argmax[o] = static_cast<std::uint32_t>(best_idx);
      }
    }
  }
  return r;
}

// Scatters grad_out to the stored argmax positions.
template <typename T>
BasicTensor<T> maxpool2_backward(const std::vector<std::uint32_t>& argmax,
                                 const BasicTensor<T>& grad_out,
                                 const std::vector<std::size_t>& input_dims) {
  BasicTensor<T> grad_in(input_dims);
  if (argmax.size() != grad_out.size())
    throw std::invalid_argument("maxpool2_backward: argmax/grad size mismatch");
  for (std::size_t o = 0; o < argmax.size(); ++o)
    grad_in[argmax[o]] += grad_out[o];
  return grad_in;
}

}  // namespace lcarep
