#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lcarep/backbone.hpp"
#include "lcarep/image.hpp"
#include "lcarep/losses.hpp"
#include "lcarep/manifest.hpp"
#include "lcarep/pseudolabel.hpp"
#include "lcarep/tensor.hpp"

namespace lcarep {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;  // images per batch, even
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  LossConfig loss;
  double pseudo_fraction = 0.5;  // rho: pseudo share of a student batch
  AugmentSwitches augment;
  std::size_t threads = 1;

  // Teacher training forces rho = 0; student training requires rho in (0,1)
  // with both rho*batch_size and the supervised remainder workable.
  void validate_teacher() const;
  void validate_student() const;
};

// A positive pair: two views of the same product, co-resident in batches.
struct PairSample {
  std::int64_t pair_id;
  Tensor first;
  Tensor second;
};

struct PairSet {
  std::vector<PairSample> pairs;
};

// Loads and decodes both members of every pair in a pairs manifest, resizing
// to input_side when a file's size differs.
PairSet load_pairs(const std::filesystem::path& manifest_path,
                   std::size_t input_side);

// Loads (id, image) rows of a plain manifest in manifest order.
struct LabeledImage {
  std::string id;
  Tensor image;
  std::optional<std::int64_t> class_id;
};
std::vector<LabeledImage> load_images(const std::filesystem::path& manifest_path,
                                      std::size_t input_side);

struct EpochMetrics {
  std::size_t epoch;
  double mean_loss;
  double mean_pos_dist;
  double mean_neg_dist;
  std::int64_t wall_ms;
};

// One JSON object per epoch, appended.
void append_metrics(const std::filesystem::path& path, const EpochMetrics& m);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochMetrics> history;
};

// Contrastive training over shuffled pair epochs with in-batch hard negative
// mining; SGD with momentum; deterministic for a fixed seed.
TrainResult train_teacher(const PairSet& pairs, const BackboneConfig& bcfg,
                          const TrainConfig& cfg);

// embed() of every manifest image, computed on clean inputs. Parallel across
// images; output independent of thread count.
PseudolabelStore generate_pseudolabels(const Checkpoint& ckpt,
                                       const std::vector<LabeledImage>& images,
                                       std::size_t threads);

// Per-epoch sampler for student batches: pairs and pseudo ids are drawn
// without replacement within an epoch, both orders reshuffled per epoch.
class EpochSampler {
 public:
  EpochSampler(std::size_t n_pairs, std::vector<std::string> pseudo_ids,
               const TrainConfig& cfg);

  void start_epoch(Rng& rng);

  struct StudentBatch {
    std::vector<std::size_t> pair_indices;
    std::vector<std::string> pseudo_ids;
  };

  // Empty result signals the end of the epoch.
  StudentBatch next_batch();

  std::size_t pairs_per_batch() const { return pairs_per_batch_; }
  std::size_t pseudo_per_batch() const { return pseudo_per_batch_; }
  std::size_t batches_per_epoch() const;

 private:
  std::vector<std::size_t> pair_order_;
  std::vector<std::string> pseudo_pool_;
  std::vector<std::size_t> pseudo_order_;
  std::size_t pair_cursor_ = 0;
  std::size_t pseudo_cursor_ = 0;
  std::size_t pairs_per_batch_;
  std::size_t pseudo_per_batch_;
};

EpochSampler::StudentBatch compose_student_batch(EpochSampler& sampler);

// Multitask training: contrastive on the supervised half, Smooth L1 between
// the student's embedding of each augmented unlabeled image and its stored
// teacher pseudolabel. The student starts from a fresh seeded init.
TrainResult train_student(const PairSet& pairs,
                          const std::vector<LabeledImage>& unlabeled,
                          const PseudolabelStore& store,
                          const BackboneConfig& bcfg, const TrainConfig& cfg);

// Mean Smooth L1 between embed(image) under `ckpt` and the stored
// pseudolabels; the student-progress measurement.
double mean_smooth_l1_to_store(const Checkpoint& ckpt,
                               const std::vector<LabeledImage>& images,
                               const PseudolabelStore& store, double beta,
                               std::size_t threads);

// Mean positive-pair and mean mined-hard-negative distance over a pair set.
struct SeparationStats {
  double mean_pos_dist;
  double mean_neg_dist;
};
SeparationStats measure_separation(const Checkpoint& ckpt, const PairSet& pairs,
                                   std::size_t threads);

// N x D embedding matrix over manifest images (clean inputs), row i matching
// manifest row i, plus the class labels when every record carries one.
struct EmbeddingMatrix {
  Tensor matrix;  // N x D
  std::vector<std::string> ids;
  std::vector<std::int64_t> labels;  // empty when any class_id is absent
};
EmbeddingMatrix embed_manifest(const Checkpoint& ckpt,
                               const std::vector<LabeledImage>& images,
                               std::size_t threads);

}  // namespace lcarep
