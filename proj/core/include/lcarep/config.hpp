#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lcarep/backbone.hpp"
#include "lcarep/pipeline.hpp"

namespace lcarep {

// Every tunable of the pipeline behind flat dotted keys, loadable from a
// key = value file and overridable one key at a time. Unknown keys are fatal.
struct RunConfig {
  BackboneConfig backbone;  // carries the pooling config
  TrainConfig train;        // carries loss weights and augmentation switches
  double classifier_l2 = 1e-3;
  std::size_t classifier_max_iters = 500;
  double classifier_tol = 1e-5;

  static const std::vector<std::string>& known_keys();

  // Assigns one key; ConfigError names the key when it is unknown or the
  // value does not parse.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  // Lines of `key = value`; '#' starts a comment; blank lines are skipped.
  void load_file(const std::filesystem::path& path);

  // Full effective configuration, one sorted `key = value` line per key.
  std::string resolved() const;
  void write_resolved(const std::filesystem::path& directory) const;
};

}  // namespace lcarep
