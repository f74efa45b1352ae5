#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lcarep/tensor.hpp"

namespace lcarep {

// Multinomial logistic regression probe over frozen embeddings. Weights and
// optimization are 64-bit end to end; persistence casts to f32 tensors.
struct LogRegModel {
  std::vector<double> W;                  // K x D, row-major
  std::vector<double> b;                  // K
  std::vector<std::int64_t> class_labels; // dense index -> original label
  double l2 = 1e-3;
  bool trained = false;

  std::size_t k() const { return b.size(); }
  std::size_t d() const { return b.empty() ? 0 : W.size() / b.size(); }
};

struct FitOptions {
  double l2 = 1e-3;
  std::size_t max_iters = 500;
  double tol = 1e-5;  // gradient infinity-norm
};

// Mean cross-entropy + (l2/2) ||W||^2 and its gradient at (W, b), dense
// labels in [0, K). The optimization objective, exposed on its own so
// finite-difference checks can bracket it.
double logreg_value_and_grad(const BasicTensor<double>& X,
                             const std::vector<std::size_t>& y, std::size_t K,
                             double l2, std::span<const double> W,
                             std::span<const double> b, std::span<double> gW,
                             std::span<double> gb);

// Full-batch gradient descent from zero weights with Armijo backtracking.
// Labels are arbitrary integers; classes are their sorted unique values.
LogRegModel fit_logreg(const Tensor& embeddings,
                       const std::vector<std::int64_t>& labels,
                       const FitOptions& opts = {});

struct Prediction {
  std::int64_t label;          // original label of the argmax class
  std::size_t class_index;     // dense index, lowest wins ties
  std::vector<double> probs;   // softmax, sums to 1
};

Prediction predict(const LogRegModel& model, std::span<const float> embedding);

double evaluate(const LogRegModel& model, const Tensor& embeddings,
                const std::vector<std::int64_t>& labels);

// CKPT-container persistence: entries "W", "b", "labels.txt", "l2".
void save_logreg(const std::filesystem::path& path, const LogRegModel& model);
LogRegModel load_logreg(const std::filesystem::path& path);

}  // namespace lcarep
