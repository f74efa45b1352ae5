#include "lcarep/backbone.hpp"

#include <cmath>

#include "lcarep/error.hpp"
#include "lcarep/rng.hpp"

namespace lcarep {

void BackboneConfig::validate() const {
  if (block_channels.empty())
    throw ConfigError("backbone: block_channels must not be empty");
  for (std::size_t c : block_channels)
    if (c == 0) throw ConfigError("backbone: zero-channel block");
  std::size_t side = input_size;
  if (side == 0) throw ConfigError("backbone: input_size must be positive");
  for (std::size_t b = 0; b < block_channels.size(); ++b) {
    if (side % 2 != 0)
      throw ConfigError("backbone: input_size " + std::to_string(input_size) +
                        " is not divisible by 2^" +
                        std::to_string(block_channels.size()) +
                        " (side before block " + std::to_string(b) + " is " +
                        std::to_string(side) + ")");
    side /= 2;
  }
  try {
    lca_check_admissible(side, side, lca);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("backbone: feature map inadmissible: ") +
                      e.what());
  }
}

std::size_t BackboneConfig::feature_side() const {
  return input_size >> block_channels.size();
}

std::size_t BackboneConfig::embedding_dim() const {
  return block_channels.back();
}

Checkpoint init_checkpoint(const BackboneConfig& config, std::uint64_t seed) {
  config.validate();
  Checkpoint ckpt;
  ckpt.config = config;
  Rng rng(seed);
  std::size_t cin = 3;
  for (std::size_t b = 0; b < config.block_channels.size(); ++b) {
    const std::size_t cout = config.block_channels[b];
    const double bound = 1.0 / std::sqrt(static_cast<double>(9 * cin));
    Tensor kernel({3, 3, cin, cout});
    for (std::size_t k = 0; k < kernel.size(); ++k)
      kernel[k] = static_cast<float>(rng.uniform(-bound, bound));
    const std::string prefix = "block" + std::to_string(b);
    ckpt.params.emplace(prefix + ".kernel", std::move(kernel));
    ckpt.params.emplace(prefix + ".bias", Tensor({cout}));
    cin = cout;
  }
  return ckpt;
}

void ParamGrads::accumulate(const std::string& name,
                            const std::vector<double>& g) {
  auto [it, inserted] = grads.try_emplace(name, g);
  if (inserted) return;
  auto& dst = it->second;
  if (dst.size() != g.size())
    throw std::invalid_argument("param grads: size mismatch for " + name);
  for (std::size_t k = 0; k < g.size(); ++k) dst[k] += g[k];
}

void ParamGrads::scale(double s) {
  for (auto& [name, g] : grads)
    for (double& v : g) v *= s;
}

}  // namespace lcarep
