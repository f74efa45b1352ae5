#include "lcarep/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "lcarep/error.hpp"
#include "lcarep/parallel.hpp"

namespace lcarep {

namespace {

constexpr std::uint64_t kTagInit = 0x494E4954ULL;     // parameter init
constexpr std::uint64_t kTagEpoch = 0x45504F43ULL;    // epoch shuffles
constexpr std::uint64_t kTagAugment = 0x4155474DULL;  // student input noise

void validate_common(const TrainConfig& cfg) {
  if (cfg.batch_size < 4 || cfg.batch_size % 2 != 0)
    throw ConfigError("train: batch_size must be even and at least 4, got " +
                      std::to_string(cfg.batch_size));
  if (!(cfg.learning_rate > 0.0))
    throw ConfigError("train: learning_rate must be positive");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
    throw ConfigError("train: momentum must lie in [0, 1)");
  if (cfg.threads < 1) throw ConfigError("train: threads must be at least 1");
  cfg.loss.validate();
}

// 64-bit master weights and velocity; the f32 checkpoint is a projection.
struct MasterParams {
  std::map<std::string, std::vector<double>> value;
  std::map<std::string, std::vector<double>> velocity;

  explicit MasterParams(const Checkpoint& ckpt) {
    for (const auto& [name, tensor] : ckpt.params) {
      std::vector<double> v(tensor.size());
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = tensor[k];
      velocity.emplace(name, std::vector<double>(v.size(), 0.0));
      value.emplace(name, std::move(v));
    }
  }

  void apply_sgd(const ParamGrads& grads, double lr, double mu) {
    for (const auto& [name, g] : grads.grads) {
      auto& v = velocity.at(name);
      auto& p = value.at(name);
      for (std::size_t k = 0; k < g.size(); ++k) {
        v[k] = mu * v[k] - lr * g[k];
        p[k] += v[k];
      }
    }
  }

  void materialize(Checkpoint& ckpt) const {
    for (auto& [name, tensor] : ckpt.params) {
      const auto& p = value.at(name);
      for (std::size_t k = 0; k < p.size(); ++k)
        tensor[k] = static_cast<float>(p[k]);
    }
  }
};

Tensor load_image_checked(const std::filesystem::path& manifest_path,
                          const ImageRecord& record, std::size_t input_side) {
  const std::filesystem::path file = resolve_image_path(manifest_path, record);
  Tensor img;
  try {
    img = read_ppm(file);
  } catch (const FormatError& e) {
    throw DatasetError(std::string("image '") + record.id + "': " + e.what());
  }
  if (img.dim(0) != input_side || img.dim(1) != input_side)
    img = bilinear_resize(img, input_side, input_side);
  return img;
}

struct BatchEval {
  std::vector<ForwardTrace<float>> traces;
  std::vector<std::vector<double>> embeddings;
};

// Embeds a batch of images with traces kept for the backward pass. Images
// are processed in parallel lanes; slot writes keep results index-ordered.
BatchEval embed_batch(const Checkpoint& ckpt, const std::vector<Tensor>& images,
                      std::size_t threads) {
  BatchEval out;
  out.traces.resize(images.size());
  out.embeddings.resize(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) {
    const std::vector<float> e = embed_image(ckpt, images[i], &out.traces[i]);
    out.embeddings[i].assign(e.begin(), e.end());
  });
  return out;
}

// Contrastive loss over co-resident pairs with hard-mined negatives.
// Returns the term-mean loss and accumulates d(loss)/d(embedding), scaled by
// `weight`, into `grad`. Positive terms come from consecutive image pairs
// (2p, 2p+1); every image is an anchor for one mined negative term.
struct ContrastiveBatch {
  double loss;
  double mean_pos_dist;
  double mean_neg_dist;
};

ContrastiveBatch contrastive_over_batch(
    const std::vector<std::vector<double>>& embeddings,
    const std::vector<std::int64_t>& pair_ids, double margin, double weight,
    std::vector<std::vector<double>>& grad) {
  const std::size_t n_images = embeddings.size();
  const std::size_t n_pairs = n_images / 2;
  const auto mined = mine_hard_negatives(embeddings, pair_ids);
  const double n_terms = static_cast<double>(n_pairs + n_images);
  const double w = weight / n_terms;

  double loss_sum = 0.0, pos_dist_sum = 0.0, neg_dist_sum = 0.0;
  auto add_pair_grad = [&](std::size_t a, std::size_t b, double dloss_dd,
                           double d) {
    if (d <= 1e-12) return;  // coincident embeddings: zero/undefined direction
    const double coeff = w * dloss_dd / d;
    auto& ga = grad[a];
    auto& gb = grad[b];
    for (std::size_t c = 0; c < ga.size(); ++c) {
      const double diff = embeddings[a][c] - embeddings[b][c];
      ga[c] += coeff * diff;
      gb[c] -= coeff * diff;
    }
  };

  for (std::size_t p = 0; p < n_pairs; ++p) {
    const std::size_t a = 2 * p, b = 2 * p + 1;
    const double d = pair_distance(embeddings[a], embeddings[b]);
    const ContrastiveTerm t = contrastive_loss(d, true, margin);
    loss_sum += t.loss;
    pos_dist_sum += d;
    add_pair_grad(a, b, t.dloss_dd, d);
  }
  for (const auto& [anchor, negative] : mined) {
    const double d = pair_distance(embeddings[anchor], embeddings[negative]);
    const ContrastiveTerm t = contrastive_loss(d, false, margin);
    loss_sum += t.loss;
    neg_dist_sum += d;
    add_pair_grad(anchor, negative, t.dloss_dd, d);
  }

  return {loss_sum / n_terms,
          pos_dist_sum / static_cast<double>(n_pairs),
          neg_dist_sum / static_cast<double>(n_images)};
}

// Backward through every image of the batch, reduced in image order so the
// parameter gradient is identical for any thread count.
ParamGrads backward_batch(const Checkpoint& ckpt, const BatchEval& batch,
                          const std::vector<std::vector<double>>& grad_emb,
                          std::size_t threads) {
  std::vector<ParamGrads> per_image(batch.traces.size());
  parallel_for(batch.traces.size(), threads, [&](std::size_t i) {
    embed_backward(ckpt, batch.traces[i],
                   std::span<const double>(grad_emb[i]), per_image[i]);
  });
  ParamGrads total;
  for (const auto& pg : per_image)
    for (const auto& [name, g] : pg.grads) total.accumulate(name, g);
  return total;
}

}  // namespace

void TrainConfig::validate_teacher() const {
  validate_common(*this);
}

void TrainConfig::validate_student() const {
  validate_common(*this);
  if (!(pseudo_fraction > 0.0 && pseudo_fraction < 1.0))
    throw ConfigError("train: pseudo_fraction must lie in (0, 1) for student "
                      "training, got " + std::to_string(pseudo_fraction));
  const double slots = pseudo_fraction * static_cast<double>(batch_size);
  if (std::abs(slots - std::round(slots)) > 1e-9)
    throw ConfigError(
        "train: pseudo_fraction * batch_size must be an integer, got " +
        std::to_string(slots));
  const std::size_t pseudo = static_cast<std::size_t>(std::llround(slots));
  const std::size_t supervised = batch_size - pseudo;
  if (supervised % 2 != 0)
    throw ConfigError("train: supervised share of the batch must be even");
  if (supervised < 4)
    throw ConfigError(
        "train: supervised share must cover at least 2 pairs for mining");
  if (pseudo < 1)
    throw ConfigError("train: pseudo share of the batch is empty");
}

PairSet load_pairs(const std::filesystem::path& manifest_path,
                   std::size_t input_side) {
  const std::vector<ImageRecord> records = read_manifest(manifest_path);
  // Group into pairs by first appearance; arity was validated on read.
  std::map<std::int64_t, std::size_t> slot_of;
  std::vector<std::vector<const ImageRecord*>> groups;
  for (const auto& r : records) {
    if (!r.pair_id)
      throw DatasetError(manifest_path.string() + ": record '" + r.id +
                         "' has no pair_id in a pairs manifest");
    auto [it, inserted] = slot_of.emplace(*r.pair_id, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(&r);
  }

  PairSet set;
  set.pairs.reserve(groups.size());
  for (const auto& g : groups) {
    PairSample s;
    s.pair_id = *g[0]->pair_id;
    s.first = load_image_checked(manifest_path, *g[0], input_side);
    s.second = load_image_checked(manifest_path, *g[1], input_side);
    set.pairs.push_back(std::move(s));
  }
  return set;
}

std::vector<LabeledImage> load_images(
    const std::filesystem::path& manifest_path, std::size_t input_side) {
  const std::vector<ImageRecord> records = read_manifest(manifest_path);
  std::vector<LabeledImage> out;
  out.reserve(records.size());
  for (const auto& r : records)
    out.push_back({r.id, load_image_checked(manifest_path, r, input_side),
                   r.class_id});
  return out;
}

void append_metrics(const std::filesystem::path& path, const EpochMetrics& m) {
  std::ofstream f(path, std::ios::app);
  if (!f) throw FormatError("metrics: cannot open for append: " + path.string());
  nlohmann::ordered_json j;
  j["epoch"] = m.epoch;
  j["mean_loss"] = m.mean_loss;
  j["mean_pos_dist"] = m.mean_pos_dist;
  j["mean_neg_dist"] = m.mean_neg_dist;
  j["wall_ms"] = m.wall_ms;
  f << j.dump() << "\n";
}

TrainResult train_teacher(const PairSet& pairs, const BackboneConfig& bcfg,
                          const TrainConfig& cfg) {
  bcfg.validate();
  cfg.validate_teacher();
  if (pairs.pairs.size() < 2)
    throw DatasetError("train-teacher: need at least 2 pairs, got " +
                       std::to_string(pairs.pairs.size()));

  TrainResult result;
  result.checkpoint = init_checkpoint(bcfg, mix_seed(cfg.seed, kTagInit));
  MasterParams master(result.checkpoint);
  const std::size_t pairs_per_batch = cfg.batch_size / 2;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng erng(mix_seed(mix_seed(cfg.seed, kTagEpoch), epoch));
    std::vector<std::size_t> order(pairs.pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    erng.shuffle(order);

    double loss_sum = 0.0, pos_sum = 0.0, neg_sum = 0.0;
    std::size_t n_batches = 0, step = 0;
    for (std::size_t start = 0; start < order.size();
         start += pairs_per_batch, ++step) {
      const std::size_t count =
          std::min(pairs_per_batch, order.size() - start);
      if (count < 2) break;  // a 1-pair tail has no negatives to mine

      std::vector<Tensor> images;
      std::vector<std::int64_t> pair_ids;
      images.reserve(2 * count);
      for (std::size_t k = 0; k < count; ++k) {
        const PairSample& p = pairs.pairs[order[start + k]];
        images.push_back(p.first);
        images.push_back(p.second);
        pair_ids.push_back(p.pair_id);
        pair_ids.push_back(p.pair_id);
      }

      BatchEval batch = embed_batch(result.checkpoint, images, cfg.threads);
      std::vector<std::vector<double>> grad_emb(
          images.size(), std::vector<double>(bcfg.embedding_dim(), 0.0));
      const ContrastiveBatch cb = contrastive_over_batch(
          batch.embeddings, pair_ids, cfg.loss.margin, 1.0, grad_emb);
      if (!std::isfinite(cb.loss))
        throw TrainingError("train-teacher: loss diverged at epoch " +
                            std::to_string(epoch) + " step " +
                            std::to_string(step));

      ParamGrads grads =
          backward_batch(result.checkpoint, batch, grad_emb, cfg.threads);
      master.apply_sgd(grads, cfg.learning_rate, cfg.momentum);
      master.materialize(result.checkpoint);

      loss_sum += cb.loss;
      pos_sum += cb.mean_pos_dist;
      neg_sum += cb.mean_neg_dist;
      ++n_batches;
    }

    const auto t1 = std::chrono::steady_clock::now();
    const double nb = static_cast<double>(std::max<std::size_t>(1, n_batches));
    result.history.push_back(
        {epoch, loss_sum / nb, pos_sum / nb, neg_sum / nb,
         std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0)
             .count()});
  }
  return result;
}

PseudolabelStore generate_pseudolabels(const Checkpoint& ckpt,
                                       const std::vector<LabeledImage>& images,
                                       std::size_t threads) {
  std::vector<std::vector<float>> slots(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) {
    slots[i] = embed_image<float>(ckpt, images[i].image);
  });
  PseudolabelStore store;
  for (std::size_t i = 0; i < images.size(); ++i)
    store.put(images[i].id, std::move(slots[i]));
  return store;
}

EpochSampler::EpochSampler(std::size_t n_pairs,
                           std::vector<std::string> pseudo_ids,
                           const TrainConfig& cfg)
    : pseudo_pool_(std::move(pseudo_ids)) {
  const std::size_t pseudo = static_cast<std::size_t>(
      std::llround(cfg.pseudo_fraction * static_cast<double>(cfg.batch_size)));
  pseudo_per_batch_ = pseudo;
  pairs_per_batch_ = (cfg.batch_size - pseudo) / 2;
  pair_order_.resize(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) pair_order_[i] = i;
  pseudo_order_.resize(pseudo_pool_.size());
  for (std::size_t i = 0; i < pseudo_order_.size(); ++i) pseudo_order_[i] = i;

  if (pseudo_pool_.size() < pseudo_per_batch_)
    throw DatasetError(
        "student batch needs " + std::to_string(pseudo_per_batch_) +
        " pseudolabel couples per batch but the store holds only " +
        std::to_string(pseudo_pool_.size()));
  const std::size_t demand = batches_per_epoch() * pseudo_per_batch_;
  if (demand > pseudo_pool_.size())
    throw DatasetError(
        "an epoch draws " + std::to_string(demand) +
        " pseudolabel couples without replacement but the store holds only " +
        std::to_string(pseudo_pool_.size()));
}

std::size_t EpochSampler::batches_per_epoch() const {
  const std::size_t n = pair_order_.size();
  std::size_t full = n / pairs_per_batch_;
  return full + (n % pairs_per_batch_ >= 2 ? 1 : 0);
}

void EpochSampler::start_epoch(Rng& rng) {
  rng.shuffle(pair_order_);
  rng.shuffle(pseudo_order_);
  pair_cursor_ = 0;
  pseudo_cursor_ = 0;
}

EpochSampler::StudentBatch EpochSampler::next_batch() {
  StudentBatch batch;
  const std::size_t pairs_left = pair_order_.size() - pair_cursor_;
  if (pairs_left < 2) return batch;
  if (pseudo_order_.size() - pseudo_cursor_ < pseudo_per_batch_) return batch;

  const std::size_t take = std::min(pairs_per_batch_, pairs_left);
  for (std::size_t k = 0; k < take; ++k)
    batch.pair_indices.push_back(pair_order_[pair_cursor_++]);
  for (std::size_t k = 0; k < pseudo_per_batch_; ++k)
    batch.pseudo_ids.push_back(pseudo_pool_[pseudo_order_[pseudo_cursor_++]]);
  return batch;
}

EpochSampler::StudentBatch compose_student_batch(EpochSampler& sampler) {
  return sampler.next_batch();
}

TrainResult train_student(const PairSet& pairs,
                          const std::vector<LabeledImage>& unlabeled,
                          const PseudolabelStore& store,
                          const BackboneConfig& bcfg, const TrainConfig& cfg) {
  bcfg.validate();
  cfg.validate_student();
  if (pairs.pairs.size() < 2)
    throw DatasetError("train-student: need at least 2 pairs, got " +
                       std::to_string(pairs.pairs.size()));
  if (unlabeled.empty())
    throw DatasetError("train-student: unlabeled manifest is empty");

  const std::size_t D = bcfg.embedding_dim();
  std::vector<std::string> pseudo_ids;
  pseudo_ids.reserve(unlabeled.size());
  for (const auto& u : unlabeled) {
    const std::vector<float>& target = store.get(u.id);  // absent id throws
    if (target.size() != D)
      throw DatasetError("pseudolabel '" + u.id + "' has dimension " +
                         std::to_string(target.size()) +
                         " but the model embeds into " + std::to_string(D));
    pseudo_ids.push_back(u.id);
  }
  std::map<std::string, const LabeledImage*> by_id;
  for (const auto& u : unlabeled) by_id.emplace(u.id, &u);

  EpochSampler sampler(pairs.pairs.size(), std::move(pseudo_ids), cfg);

  TrainResult result;
  result.checkpoint = init_checkpoint(bcfg, mix_seed(cfg.seed, kTagInit));
  MasterParams master(result.checkpoint);
  const double lambda = cfg.loss.lambda;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng erng(mix_seed(mix_seed(cfg.seed, kTagEpoch), epoch));
    Rng arng(mix_seed(mix_seed(cfg.seed, kTagAugment), epoch));
    sampler.start_epoch(erng);

    double loss_sum = 0.0, pos_sum = 0.0, neg_sum = 0.0;
    std::size_t n_batches = 0, step = 0;
    for (;; ++step) {
      const auto sb = compose_student_batch(sampler);
      if (sb.pair_indices.empty()) break;

      // Supervised half: both members of each pair, noised like all student
      // inputs. Pseudo half: augmented unlabeled image, clean-image target.
      std::vector<Tensor> images;
      std::vector<std::int64_t> pair_ids;
      for (std::size_t idx : sb.pair_indices) {
        const PairSample& p = pairs.pairs[idx];
        images.push_back(augment(p.first, cfg.augment, arng));
        images.push_back(augment(p.second, cfg.augment, arng));
        pair_ids.push_back(p.pair_id);
        pair_ids.push_back(p.pair_id);
      }
      const std::size_t n_sup = images.size();
      for (const std::string& id : sb.pseudo_ids)
        images.push_back(augment(by_id.at(id)->image, cfg.augment, arng));

      BatchEval batch = embed_batch(result.checkpoint, images, cfg.threads);
      std::vector<std::vector<double>> grad_emb(
          images.size(), std::vector<double>(D, 0.0));

      std::vector<std::vector<double>> sup_emb(
          batch.embeddings.begin(), batch.embeddings.begin() + n_sup);
      std::vector<std::vector<double>> sup_grad(n_sup,
                                                std::vector<double>(D, 0.0));
      const ContrastiveBatch cb = contrastive_over_batch(
          sup_emb, pair_ids, cfg.loss.margin, lambda, sup_grad);
      for (std::size_t i = 0; i < n_sup; ++i) grad_emb[i] = sup_grad[i];

      double smooth_sum = 0.0;
      const double couple_w =
          (1.0 - lambda) / static_cast<double>(sb.pseudo_ids.size());
      for (std::size_t q = 0; q < sb.pseudo_ids.size(); ++q) {
        const std::vector<float>& target_f = store.get(sb.pseudo_ids[q]);
        std::vector<double> target(target_f.begin(), target_f.end());
        const SmoothL1Result sl =
            smooth_l1(batch.embeddings[n_sup + q], target,
                      cfg.loss.smooth_l1_beta);
        smooth_sum += sl.loss;
        for (std::size_t c = 0; c < D; ++c)
          grad_emb[n_sup + q][c] += couple_w * sl.grad[c];
      }
      const double smooth_mean =
          smooth_sum / static_cast<double>(sb.pseudo_ids.size());
      const double loss = multitask_loss(cb.loss, smooth_mean, lambda);
      if (!std::isfinite(loss))
        throw TrainingError("train-student: loss diverged at epoch " +
                            std::to_string(epoch) + " step " +
                            std::to_string(step));

      ParamGrads grads =
          backward_batch(result.checkpoint, batch, grad_emb, cfg.threads);
      master.apply_sgd(grads, cfg.learning_rate, cfg.momentum);
      master.materialize(result.checkpoint);

      loss_sum += loss;
      pos_sum += cb.mean_pos_dist;
      neg_sum += cb.mean_neg_dist;
      ++n_batches;
    }

    const auto t1 = std::chrono::steady_clock::now();
    const double nb = static_cast<double>(std::max<std::size_t>(1, n_batches));
    result.history.push_back(
        {epoch, loss_sum / nb, pos_sum / nb, neg_sum / nb,
         std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0)
             .count()});
  }
  return result;
}

double mean_smooth_l1_to_store(const Checkpoint& ckpt,
                               const std::vector<LabeledImage>& images,
                               const PseudolabelStore& store, double beta,
                               std::size_t threads) {
  if (images.empty())
    throw std::invalid_argument("mean_smooth_l1_to_store: no images");
  std::vector<double> losses(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) {
    const std::vector<float> e = embed_image<float>(ckpt, images[i].image);
    const std::vector<float>& target_f = store.get(images[i].id);
    const std::vector<double> pred(e.begin(), e.end());
    const std::vector<double> target(target_f.begin(), target_f.end());
    losses[i] = smooth_l1(pred, target, beta).loss;
  });
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(losses.size());
}

SeparationStats measure_separation(const Checkpoint& ckpt, const PairSet& pairs,
                                   std::size_t threads) {
  if (pairs.pairs.size() < 2)
    throw std::invalid_argument("measure_separation: need at least 2 pairs");
  std::vector<Tensor> images;
  std::vector<std::int64_t> pair_ids;
  for (const auto& p : pairs.pairs) {
    images.push_back(p.first);
    images.push_back(p.second);
    pair_ids.push_back(p.pair_id);
    pair_ids.push_back(p.pair_id);
  }
  BatchEval batch = embed_batch(ckpt, images, threads);

  double pos_sum = 0.0;
  for (std::size_t p = 0; p < pairs.pairs.size(); ++p)
    pos_sum += pair_distance(batch.embeddings[2 * p],
                             batch.embeddings[2 * p + 1]);
  const auto mined = mine_hard_negatives(batch.embeddings, pair_ids);
  double neg_sum = 0.0;
  for (const auto& [anchor, negative] : mined)
    neg_sum +=
        pair_distance(batch.embeddings[anchor], batch.embeddings[negative]);
  return {pos_sum / static_cast<double>(pairs.pairs.size()),
          neg_sum / static_cast<double>(mined.size())};
}

EmbeddingMatrix embed_manifest(const Checkpoint& ckpt,
                               const std::vector<LabeledImage>& images,
                               std::size_t threads) {
  if (images.empty())
    throw DatasetError("embed: manifest has no images");
  const std::size_t D = ckpt.config.embedding_dim();
  EmbeddingMatrix out;
  out.matrix = Tensor({images.size(), D});
  out.ids.reserve(images.size());
  for (const auto& img : images) out.ids.push_back(img.id);

  parallel_for(images.size(), threads, [&](std::size_t i) {
    const std::vector<float> e = embed_image<float>(ckpt, images[i].image);
    for (std::size_t c = 0; c < D; ++c) out.matrix[i * D + c] = e[c];
  });

  const bool all_labeled =
      std::all_of(images.begin(), images.end(),
                  [](const LabeledImage& im) { return im.class_id.has_value(); });
  if (all_labeled)
    for (const auto& img : images) out.labels.push_back(*img.class_id);
  return out;
}

}  // namespace lcarep
