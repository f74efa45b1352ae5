#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "lcarep/rng.hpp"

namespace lcarep {

// Margin contrastive loss on embedding pairs, Smooth L1 on pseudolabels, and
// the weighted combination of the two. All arithmetic is 64-bit; callers
// widen f32 embeddings first (exact) so gradient checks see one code path.
struct LossConfig {
  double margin = 1.0;
  double smooth_l1_beta = 1.0;
  double lambda = 0.5;  // weight on the contrastive term

  void validate() const;  // throws ConfigError
};

// Euclidean distance; unit inputs land in [0, 2].
double pair_distance(std::span<const double> a, std::span<const double> b);

struct ContrastiveTerm {
  double loss;
  double dloss_dd;
};

// Positive pair: d^2. Negative pair: max(0, m - d)^2. The derivative is
// analytic: 2d, respectively -2 max(0, m - d).
ContrastiveTerm contrastive_loss(double d, bool is_positive, double margin);

// One (anchor, negative) per batch member: the nearest embedding carrying a
// different pair_id, distance ties going to the lowest index. A batch with
// a single pair_id has no valid negative anywhere and aborts the step.
std::vector<std::pair<std::size_t, std::size_t>> mine_hard_negatives(
    const std::vector<std::vector<double>>& embeddings,
    const std::vector<std::int64_t>& pair_ids);

// Ablation fallback: a uniformly random other-pair member per anchor.
std::vector<std::pair<std::size_t, std::size_t>> mine_random_negatives(
    const std::vector<std::int64_t>& pair_ids, Rng& rng);

struct SmoothL1Result {
  double loss;
  std::vector<double> grad;  // d(loss)/d(pred)
};

// Mean over elements of 0.5 x^2 / beta when |x| < beta, else |x| - 0.5 beta,
// with x = pred - target. Gradient per element: clamp(x / beta, -1, 1) / n.
SmoothL1Result smooth_l1(std::span<const double> pred,
                         std::span<const double> target, double beta);

double multitask_loss(double contrastive_mean, double smooth_l1_mean,
                      double lambda);

}  // namespace lcarep
