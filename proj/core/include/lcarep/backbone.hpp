#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "lcarep/lca.hpp"
#include "lcarep/nn_ops.hpp"
#include "lcarep/tensor.hpp"

namespace lcarep {

// conv 3x3 (stride 1, pad 1) -> ReLU -> 2x2 max pool, repeated per block.
struct BackboneConfig {
  std::size_t input_size = 64;                      // square side, pixels
  std::vector<std::size_t> block_channels = {16, 32, 64};
  LcaConfig lca;

  // Throws ConfigError unless input_size is divisible by 2^blocks and the
  // resulting feature side admits at least one pooling window.
  void validate() const;
  std::size_t feature_side() const;     // input_size >> #blocks
  std::size_t embedding_dim() const;    // last block's channel count
};

// Named parameter tensors plus the config they were built for. The map is
// ordered so serialization round-trips bit for bit.
struct Checkpoint {
  BackboneConfig config;
  std::map<std::string, Tensor> params;
};

// Uniform +-1/sqrt(fan_in) weights, zero biases, deterministic in `seed`.
Checkpoint init_checkpoint(const BackboneConfig& config, std::uint64_t seed);

// Everything the backward pass needs, captured during the forward pass.
template <typename T>
struct ForwardTrace {
  std::vector<BasicTensor<T>> conv_in;    // per block
  std::vector<BasicTensor<T>> conv_out;   // pre-ReLU, per block
  std::vector<std::vector<std::uint32_t>> pool_argmax;
  std::vector<std::vector<std::size_t>> pool_in_dims;
  BasicTensor<T> features;                // final feature map
  std::vector<double> lca_out;            // pooled vector, before normalize
  std::vector<T> embedding;               // unit-norm embedding
};

// Flat gradient storage addressed like Checkpoint::params; accumulates in f64.
struct ParamGrads {
  std::map<std::string, std::vector<double>> grads;

  void accumulate(const std::string& name, const std::vector<double>& g);
  void scale(double s);
};

namespace detail {

template <typename T>
BasicTensor<T> param_as(const Tensor& p) {
  if constexpr (std::is_same_v<T, float>) return p;
  else return p.template cast<T>();
}

}  // namespace detail

// Runs the conv/ReLU/pool stack; returns the final feature map.
template <typename T>
BasicTensor<T> backbone_forward(const Checkpoint& ckpt,
                                const BasicTensor<T>& image,
                                ForwardTrace<T>* trace = nullptr) {
  const auto& cfg = ckpt.config;
  if (image.rank() != 3 || image.dim(0) != cfg.input_size ||
      image.dim(1) != cfg.input_size || image.dim(2) != 3)
    throw std::invalid_argument("backbone_forward: image shape mismatch");
  BasicTensor<T> x = image;
  for (std::size_t b = 0; b < cfg.block_channels.size(); ++b) {
    const std::string prefix = "block" + std::to_string(b);
    const auto kernel = detail::param_as<T>(ckpt.params.at(prefix + ".kernel"));
    const auto bias_t = detail::param_as<T>(ckpt.params.at(prefix + ".bias"));
    if (trace) trace->conv_in.push_back(x);
    BasicTensor<T> conv = conv2d_forward(x, kernel, bias_t.values());
    if (trace) trace->conv_out.push_back(conv);
    BasicTensor<T> act = relu_forward(conv);
    auto pooled = maxpool2_forward(act);
    if (trace) {
      trace->pool_argmax.push_back(std::move(pooled.argmax));
      trace->pool_in_dims.push_back(act.dims());
    }
    x = std::move(pooled.output);
  }
  if (trace) trace->features = x;
  return x;
}

// Feature map -> LCA pool -> l2 normalize. Fills `trace` when provided.
template <typename T>
std::vector<T> embed_image(const Checkpoint& ckpt, const BasicTensor<T>& image,
                           ForwardTrace<T>* trace = nullptr) {
  BasicTensor<T> features = backbone_forward(ckpt, image, trace);
  std::vector<T> pooled = lca_forward(features, ckpt.config.lca);
  std::vector<T> emb = l2_normalize(pooled);
  if (trace) {
    trace->lca_out.assign(pooled.begin(), pooled.end());
    trace->embedding = emb;
  }
  return emb;
}

// Propagates d(loss)/d(embedding) back through normalize, LCA pool and the
// conv stack; accumulates parameter gradients into `pg`.
template <typename T>
void embed_backward(const Checkpoint& ckpt, const ForwardTrace<T>& trace,
                    std::span<const double> grad_embedding, ParamGrads& pg) {
  const auto& cfg = ckpt.config;
  const std::size_t C = cfg.embedding_dim();
  if (grad_embedding.size() != C)
    throw std::invalid_argument("embed_backward: gradient size mismatch");

  // Through y / ||y||: grad_y = (g - e (e . g)) / ||y||. Below the epsilon
  // the forward pass was the identity, so the gradient passes through.
  double norm_sq = 0.0;
  for (double y : trace.lca_out) norm_sq += y * y;
  const double norm = std::sqrt(norm_sq);
  std::vector<double> grad_y(C);
  if (norm <= 1e-12) {
    for (std::size_t c = 0; c < C; ++c) grad_y[c] = grad_embedding[c];
  } else {
    double dot = 0.0;
    for (std::size_t c = 0; c < C; ++c)
      dot += static_cast<double>(trace.embedding[c]) * grad_embedding[c];
    for (std::size_t c = 0; c < C; ++c)
      grad_y[c] =
          (grad_embedding[c] - static_cast<double>(trace.embedding[c]) * dot) /
          norm;
  }

  const std::size_t side = cfg.feature_side();
  BasicTensor<double> grad_map =
      lca_backward(std::span<const double>(grad_y.data(), grad_y.size()), side,
                   side, cfg.lca);
  BasicTensor<T> gx({side, side, C});
  for (std::size_t k = 0; k < gx.size(); ++k)
    gx[k] = static_cast<T>(grad_map[k]);

  for (std::size_t b = cfg.block_channels.size(); b-- > 0;) {
    const std::string prefix = "block" + std::to_string(b);
    BasicTensor<T> g_act =
        maxpool2_backward(trace.pool_argmax[b], gx, trace.pool_in_dims[b]);
    BasicTensor<T> g_conv = relu_backward(trace.conv_out[b], g_act);
    const auto kernel = detail::param_as<T>(ckpt.params.at(prefix + ".kernel"));
    auto grads = conv2d_backward(trace.conv_in[b], kernel, g_conv);

    std::vector<double> gk(grads.kernel.size());
    for (std::size_t k = 0; k < gk.size(); ++k)
      gk[k] = static_cast<double>(grads.kernel[k]);
    pg.accumulate(prefix + ".kernel", gk);
    std::vector<double> gb(grads.bias.size());
    for (std::size_t k = 0; k < gb.size(); ++k)
      gb[k] = static_cast<double>(grads.bias[k]);
    pg.accumulate(prefix + ".bias", gb);

    gx = std::move(grads.input);
  }
}

}  // namespace lcarep
