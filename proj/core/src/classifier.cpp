#include "lcarep/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "lcarep/checkpoint_io.hpp"
#include "lcarep/error.hpp"

namespace lcarep {

namespace {

// Softmax with max-logit subtraction, written into `probs`.
void softmax(std::span<const double> logits, std::span<double> probs) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    probs[k] = std::exp(logits[k] - m);
    sum += probs[k];
  }
  for (std::size_t k = 0; k < logits.size(); ++k) probs[k] /= sum;
}

}  // namespace

double logreg_value_and_grad(const BasicTensor<double>& X,
                             const std::vector<std::size_t>& y, std::size_t K,
                             double l2, std::span<const double> W,
                             std::span<const double> b, std::span<double> gW,
                             std::span<double> gb) {
  if (X.rank() != 2) throw std::invalid_argument("logreg: X must be rank 2");
  const std::size_t N = X.dim(0), D = X.dim(1);
  if (y.size() != N) throw std::invalid_argument("logreg: labels size mismatch");
  if (K < 2) throw std::invalid_argument("logreg: need at least 2 classes");
  if (W.size() != K * D || b.size() != K || gW.size() != K * D ||
      gb.size() != K)
    throw std::invalid_argument("logreg: parameter size mismatch");
  for (std::size_t label : y)
    if (label >= K)
      throw std::invalid_argument("logreg: label " + std::to_string(label) +
                                  " outside [0, " + std::to_string(K) + ")");

  std::fill(gW.begin(), gW.end(), 0.0);
  std::fill(gb.begin(), gb.end(), 0.0);

  const double inv_n = 1.0 / static_cast<double>(N);
  double loss = 0.0;
  std::vector<double> logits(K), probs(K);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      double z = b[k];
      const double* w = W.data() + k * D;
      for (std::size_t j = 0; j < D; ++j) z += w[j] * X.at(i, j);
      logits[k] = z;
    }
    softmax(logits, probs);
    // log(p_y) via the stable identity log p = z_y - m - log sum exp(z - m).
    const double m = *std::max_element(logits.begin(), logits.end());
    double lse = 0.0;
    for (std::size_t k = 0; k < K; ++k) lse += std::exp(logits[k] - m);
    loss += -(logits[y[i]] - m - std::log(lse)) * inv_n;
    for (std::size_t k = 0; k < K; ++k) {
      const double delta =
          (probs[k] - (k == y[i] ? 1.0 : 0.0)) * inv_n;
      gb[k] += delta;
      double* gw = gW.data() + k * D;
      for (std::size_t j = 0; j < D; ++j) gw[j] += delta * X.at(i, j);
    }
  }

  double reg = 0.0;
  for (std::size_t k = 0; k < W.size(); ++k) {
    reg += W[k] * W[k];
    gW[k] += l2 * W[k];
  }
  return loss + 0.5 * l2 * reg;
}

LogRegModel fit_logreg(const Tensor& embeddings,
                       const std::vector<std::int64_t>& labels,
                       const FitOptions& opts) {
  if (embeddings.rank() != 2)
    throw std::invalid_argument("fit_logreg: embeddings must be rank 2 (N x D)");
  const std::size_t N = embeddings.dim(0), D = embeddings.dim(1);
  if (labels.size() != N)
    throw std::invalid_argument("fit_logreg: labels size mismatch");
  if (!embeddings.all_finite())
    throw DatasetError("fit_logreg: non-finite embedding value");
  if (!(opts.l2 >= 0.0))
    throw std::invalid_argument("fit_logreg: l2 must be nonnegative");
  if (!(opts.tol > 0.0))
    throw std::invalid_argument("fit_logreg: tol must be positive");

  const std::set<std::int64_t> unique(labels.begin(), labels.end());
  const std::size_t K = unique.size();
  if (K < 2)
    throw std::invalid_argument("fit_logreg: need at least 2 distinct classes");
  if (N < K)
    throw std::invalid_argument("fit_logreg: fewer samples than classes");

  LogRegModel model;
  model.class_labels.assign(unique.begin(), unique.end());
  model.l2 = opts.l2;
  std::map<std::int64_t, std::size_t> dense;
  for (std::size_t k = 0; k < model.class_labels.size(); ++k)
    dense[model.class_labels[k]] = k;
  std::vector<std::size_t> y(N);
  for (std::size_t i = 0; i < N; ++i) y[i] = dense.at(labels[i]);

  const BasicTensor<double> X = embeddings.cast<double>();
  model.W.assign(K * D, 0.0);
  model.b.assign(K, 0.0);

  std::vector<double> gW(K * D), gb(K);
  std::vector<double> trialW(K * D), trialb(K);
  std::vector<double> trial_gW(K * D), trial_gb(K);
  double loss = logreg_value_and_grad(X, y, K, opts.l2, model.W, model.b, gW, gb);

  for (std::size_t iter = 0; iter < opts.max_iters; ++iter) {
    double gmax = 0.0, gsq = 0.0;
    for (double g : gW) {
      gmax = std::max(gmax, std::fabs(g));
      gsq += g * g;
    }
    for (double g : gb) {
      gmax = std::max(gmax, std::fabs(g));
      gsq += g * g;
    }
    if (gmax < opts.tol) break;

    // Armijo backtracking on f(theta - a g) <= f(theta) - c a ||g||^2.
    constexpr double kArmijoC = 1e-4;
    double step = 1.0;
    bool accepted = false;
    while (step > 1e-12) {
      for (std::size_t k = 0; k < trialW.size(); ++k)
        trialW[k] = model.W[k] - step * gW[k];
      for (std::size_t k = 0; k < trialb.size(); ++k)
        trialb[k] = model.b[k] - step * gb[k];
      const double trial_loss = logreg_value_and_grad(
          X, y, K, opts.l2, trialW, trialb, trial_gW, trial_gb);
      if (trial_loss <= loss - kArmijoC * step * gsq) {
        model.W.swap(trialW);
        model.b.swap(trialb);
        gW.swap(trial_gW);
        gb.swap(trial_gb);
        loss = trial_loss;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no productive step exists at this scale
  }

  model.trained = true;
  return model;
}

Prediction predict(const LogRegModel& model,
                   std::span<const float> embedding) {
  if (!model.trained)
    throw std::invalid_argument("predict: model is not trained");
  const std::size_t K = model.k(), D = model.d();
  if (embedding.size() != D)
    throw std::invalid_argument("predict: embedding dimension " +
                                std::to_string(embedding.size()) +
                                " does not match model dimension " +
                                std::to_string(D));
  std::vector<double> logits(K);
  for (std::size_t k = 0; k < K; ++k) {
    double z = model.b[k];
    const double* w = model.W.data() + k * D;
    for (std::size_t j = 0; j < D; ++j)
      z += w[j] * static_cast<double>(embedding[j]);
    logits[k] = z;
  }
  Prediction p;
  p.probs.resize(K);
  softmax(logits, p.probs);
  p.class_index = 0;
  for (std::size_t k = 1; k < K; ++k)
    if (p.probs[k] > p.probs[p.class_index]) p.class_index = k;
  p.label = model.class_labels[p.class_index];
  return p;
}

double evaluate(const LogRegModel& model, const Tensor& embeddings,
                const std::vector<std::int64_t>& labels) {
  if (embeddings.rank() != 2)
    throw std::invalid_argument("evaluate: embeddings must be rank 2");
  const std::size_t N = embeddings.dim(0), D = embeddings.dim(1);
  if (labels.size() != N)
    throw std::invalid_argument("evaluate: labels size mismatch");
  if (N == 0) throw std::invalid_argument("evaluate: empty evaluation set");

  std::size_t correct = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const std::span<const float> row(embeddings.values().data() + i * D, D);
    if (predict(model, row).label == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(N);
}

void save_logreg(const std::filesystem::path& path, const LogRegModel& model) {
  if (!model.trained)
    throw std::invalid_argument("save_logreg: model is not trained");
  const std::size_t K = model.k(), D = model.d();
  std::map<std::string, Tensor> entries;
  Tensor W({K, D});
  for (std::size_t k = 0; k < W.size(); ++k)
    W[k] = static_cast<float>(model.W[k]);
  Tensor b({K});
  for (std::size_t k = 0; k < K; ++k) b[k] = static_cast<float>(model.b[k]);
  entries.emplace("W", std::move(W));
  entries.emplace("b", std::move(b));
  std::ostringstream label_text;
  for (std::int64_t label : model.class_labels) label_text << label << "\n";
  entries.emplace("labels.txt", text_to_tensor(label_text.str()));
  entries.emplace("l2", Tensor({1}, {static_cast<float>(model.l2)}));
  write_ckpt_entries(path, entries);
}

LogRegModel load_logreg(const std::filesystem::path& path) {
  const std::string origin = path.string();
  auto entries = read_ckpt_entries(path);
  auto need = [&](const char* name) -> const Tensor& {
    auto it = entries.find(name);
    if (it == entries.end())
      throw FormatError(origin + ": missing entry '" + std::string(name) + "'");
    return it->second;
  };
  const Tensor& W = need("W");
  const Tensor& b = need("b");
  if (W.rank() != 2 || b.rank() != 1 || W.dim(0) != b.dim(0))
    throw FormatError(origin + ": W/b shape mismatch");

  LogRegModel model;
  model.W.assign(W.values().begin(), W.values().end());
  model.b.assign(b.values().begin(), b.values().end());
  const std::string label_text = tensor_to_text(need("labels.txt"));
  std::istringstream lines(label_text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    try {
      model.class_labels.push_back(std::stoll(line));
    } catch (const std::exception&) {
      throw FormatError(origin + ": bad label '" + line + "' in labels.txt");
    }
  }
  if (model.class_labels.size() != model.b.size())
    throw FormatError(origin + ": label count does not match class count");
  const Tensor& l2 = need("l2");
  if (l2.size() != 1) throw FormatError(origin + ": l2 entry is not a scalar");
  model.l2 = l2[0];
  model.trained = true;
  return model;
}

}  // namespace lcarep
