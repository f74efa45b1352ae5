#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "lcarep/tensor.hpp"

namespace lcarep {

// Procedural stand-in for a retail-product corpus: every class is one
// deterministic "package" render, every image of the class is that render
// passed through the augmentation stack at a given distortion level.
//
// Two disjoint class populations are produced: representation-learning
// classes (ids 0 .. n_classes-1), emitted as positive pairs plus unlabeled
// singles, and probe classes (ids n_classes .. n_classes+probe_classes-1)
// for one-shot classifier evaluation.
struct SyntheticSpec {
  std::size_t n_classes = 40;          // representation-learning classes
  std::size_t images_per_class = 4;    // pair images per class; must be even
  std::size_t heldout_pairs_per_class = 1;
  std::size_t unlabeled_per_class = 4;
  std::size_t unlabeled_heldout_per_class = 1;
  std::size_t probe_classes = 20;
  std::size_t probe_train_per_class = 1;
  std::size_t probe_test_per_class = 10;
  std::size_t side = 64;
  double distortion = 0.5;
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError

  static SyntheticSpec from_json_file(const std::filesystem::path& path);
  void to_json_file(const std::filesystem::path& path) const;
};

// The canonical (undistorted) render of a class.
Tensor render_class(const SyntheticSpec& spec, std::size_t class_id);

// Writes images/*.ppm plus the manifests pairs.jsonl, pairs_heldout.jsonl,
// unlabeled.jsonl, unlabeled_heldout.jsonl, probe_train.jsonl and
// probe_test.jsonl under out_dir. Output is a pure function of the spec.
void gen_synthetic(const SyntheticSpec& spec,
                   const std::filesystem::path& out_dir);

}  // namespace lcarep
