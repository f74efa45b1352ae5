#include "lcarep/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "lcarep/error.hpp"

namespace lcarep {

void LossConfig::validate() const {
  if (!(margin >= 0.0))
    throw ConfigError("loss: margin must be nonnegative, got " +
                      std::to_string(margin));
  if (!(smooth_l1_beta > 0.0))
    throw ConfigError("loss: smooth_l1_beta must be positive, got " +
                      std::to_string(smooth_l1_beta));
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ConfigError("loss: lambda must lie in [0, 1], got " +
                      std::to_string(lambda));
}

double pair_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("pair_distance: length mismatch, " +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

ContrastiveTerm contrastive_loss(double d, bool is_positive, double margin) {
  if (is_positive) return {d * d, 2.0 * d};
  const double hinge = std::max(0.0, margin - d);
  return {hinge * hinge, -2.0 * hinge};
}

std::vector<std::pair<std::size_t, std::size_t>> mine_hard_negatives(
    const std::vector<std::vector<double>>& embeddings,
    const std::vector<std::int64_t>& pair_ids) {
  const std::size_t n = embeddings.size();
  if (n != pair_ids.size())
    throw std::invalid_argument("mining: embeddings/pair_ids size mismatch");
  if (n < 2) throw std::invalid_argument("mining: batch size must be >= 2");
  const bool any_other = std::any_of(
      pair_ids.begin(), pair_ids.end(),
      [&](std::int64_t id) { return id != pair_ids.front(); });
  if (!any_other)
    throw TrainingError(
        "mining: all batch members share one pair id, no valid negative");

  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(n);
  for (std::size_t a = 0; a < n; ++a) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = n;
    for (std::size_t b = 0; b < n; ++b) {
      if (pair_ids[b] == pair_ids[a]) continue;
      const double d = pair_distance(embeddings[a], embeddings[b]);
      if (d < best) {
        best = d;
        best_idx = b;
      }
    }
    // Candidates exist (checked above), so the sentinel survives only when
    // every distance was non-finite. Report that instead of handing the
    // caller an out-of-range index.
    if (best_idx == n)
      throw TrainingError(
          "mining: no finite distance to any candidate negative");
    out.emplace_back(a, best_idx);
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> mine_random_negatives(
    const std::vector<std::int64_t>& pair_ids, Rng& rng) {
  const std::size_t n = pair_ids.size();
  if (n < 2) throw std::invalid_argument("mining: batch size must be >= 2");
  const bool any_other = std::any_of(
      pair_ids.begin(), pair_ids.end(),
      [&](std::int64_t id) { return id != pair_ids.front(); });
  if (!any_other)
    throw TrainingError(
        "mining: all batch members share one pair id, no valid negative");

  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(n);
  std::vector<std::size_t> candidates;
  for (std::size_t a = 0; a < n; ++a) {
    candidates.clear();
    for (std::size_t b = 0; b < n; ++b)
      if (pair_ids[b] != pair_ids[a]) candidates.push_back(b);
    out.emplace_back(a, candidates[rng.uniform_index(candidates.size())]);
  }
  return out;
}

SmoothL1Result smooth_l1(std::span<const double> pred,
                         std::span<const double> target, double beta) {
  if (pred.size() != target.size())
    throw std::invalid_argument("smooth_l1: length mismatch, " +
                                std::to_string(pred.size()) + " vs " +
                                std::to_string(target.size()));
  if (!(beta > 0.0))
    throw std::invalid_argument("smooth_l1: beta must be positive");
  if (pred.empty()) throw std::invalid_argument("smooth_l1: empty input");

  const double n = static_cast<double>(pred.size());
  SmoothL1Result r{0.0, std::vector<double>(pred.size())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double x = pred[i] - target[i];
    const double ax = std::fabs(x);
    r.loss += ax < beta ? 0.5 * x * x / beta : ax - 0.5 * beta;
    r.grad[i] = std::clamp(x / beta, -1.0, 1.0) / n;
  }
  r.loss /= n;
  return r;
}

double multitask_loss(double contrastive_mean, double smooth_l1_mean,
                      double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("multitask_loss: lambda must lie in [0, 1]");
  return lambda * contrastive_mean + (1.0 - lambda) * smooth_l1_mean;
}

}  // namespace lcarep
