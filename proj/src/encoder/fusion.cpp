#include <cmath>
#include <stdexcept>
#include <string>

#include "vmr/encoder.hpp"
#include "vmr/ops.hpp"

namespace vmr::encoder {

FusionParams FusionParams::init(const FusionConfig& config, Rng& rng) {
  if (config.heads == 0 || config.model_dim % config.heads)
    throw std::invalid_argument("fusion: model_dim must be divisible by heads");
  FusionParams p;
  p.config = config;
  const std::size_t D = config.model_dim, dh = config.head_dim(), F = config.ffn_hidden;
  const auto inv_sqrt = [](std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); };
  p.token_weight = uniform_parameter({config.feature_channels, D}, inv_sqrt(config.feature_channels), rng);
  p.token_bias = constant_parameter({D}, 0.0);
  p.view_embed = uniform_parameter({4, D}, 0.1, rng);
  p.absent_embed = uniform_parameter({D}, 0.1, rng);
  p.ln1_gamma = constant_parameter({D}, 1.0);
  p.ln1_beta = constant_parameter({D}, 0.0);
  for (std::size_t h = 0; h < config.heads; ++h) {
    p.wq.push_back(uniform_parameter({D, dh}, inv_sqrt(D), rng));
    p.wk.push_back(uniform_parameter({D, dh}, inv_sqrt(D), rng));
    p.wv.push_back(uniform_parameter({D, dh}, inv_sqrt(D), rng));
    p.wo.push_back(uniform_parameter({dh, D}, inv_sqrt(D), rng));
  }
  p.out_bias = constant_parameter({D}, 0.0);
  p.ln2_gamma = constant_parameter({D}, 1.0);
  p.ln2_beta = constant_parameter({D}, 0.0);
  p.ffn_w1 = uniform_parameter({D, F}, inv_sqrt(D), rng);
  p.ffn_b1 = constant_parameter({F}, 0.0);
  p.ffn_w2 = uniform_parameter({F, D}, inv_sqrt(F), rng);
  p.ffn_b2 = constant_parameter({D}, 0.0);
  return p;
}

vmrnn::NamedTensors FusionParams::named_tensors() const {
  vmrnn::NamedTensors out{{"token_weight", token_weight}, {"token_bias", token_bias}, {"view_embed", view_embed},
                          {"absent_embed", absent_embed}, {"ln1_gamma", ln1_gamma},   {"ln1_beta", ln1_beta}};
  for (std::size_t h = 0; h < wq.size(); ++h) {
    const std::string s = std::to_string(h);
    out.emplace_back("head" + s + ".wq", wq[h]);
    out.emplace_back("head" + s + ".wk", wk[h]);
    out.emplace_back("head" + s + ".wv", wv[h]);
    out.emplace_back("head" + s + ".wo", wo[h]);
  }
  out.emplace_back("out_bias", out_bias);
  out.emplace_back("ln2_gamma", ln2_gamma);
  out.emplace_back("ln2_beta", ln2_beta);
  out.emplace_back("ffn_w1", ffn_w1);
  out.emplace_back("ffn_b1", ffn_b1);
  out.emplace_back("ffn_w2", ffn_w2);
  out.emplace_back("ffn_b2", ffn_b2);
  return out;
}

FusionResult fuse_views(std::span<const Tensor, 4> features, std::span<const bool, 4> present,
                        const FusionParams& params) {
  const auto& cfg = params.config;
  const std::size_t D = cfg.model_dim;
  const Shape& ref = features[0].shape();
  for (const auto& f : features) {
    if (f.rank() != 3 || f.shape() != ref || f.dim(0) != cfg.feature_channels)
      throw ShapeError("fuse_views: feature maps must share shape [" + std::to_string(cfg.feature_channels) +
                       " x H x W], got " + shape_str(f.shape()));
  }

  // Token v = pooled feature projection + embedding of view v (or "absent").
  std::array<Tensor, 4> rows;
  for (std::size_t v = 0; v < 4; ++v) {
    Tensor pooled = reshape(mean_spatial(features[v]), {1, cfg.feature_channels});
    if (!present[v]) pooled = Tensor::zeros({1, cfg.feature_channels});
    Tensor token = reshape(linear(pooled, params.token_weight, params.token_bias), {D});
    std::vector<std::size_t> idx(D);
    for (std::size_t i = 0; i < D; ++i) idx[i] = v * D + i;
    Tensor embed = present[v] ? gather(params.view_embed, std::move(idx), {D}) : params.absent_embed;
    rows[v] = add(token, embed);
  }
  Tensor tokens = reshape(concat(rows), {4, D});

  FusionResult result;
  result.tokens = tokens;
  Tensor normed = layernorm(tokens, params.ln1_gamma, params.ln1_beta);
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim()));
  Tensor attended;
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    Tensor q = matmul(normed, params.wq[h]);
    Tensor k = matmul(normed, params.wk[h]);
    Tensor v = matmul(normed, params.wv[h]);
    Tensor weights = softmax_rows(scale(matmul(q, transpose(k)), inv_scale));
    result.attention.push_back(weights);
    Tensor mixed = matmul(weights, v);
    attended = attended.defined() ? add(attended, matmul(mixed, params.wo[h])) : linear(mixed, params.wo[h], params.out_bias);
  }
  Tensor x1 = add(tokens, attended);
  Tensor hidden = silu(linear(layernorm(x1, params.ln2_gamma, params.ln2_beta), params.ffn_w1, params.ffn_b1));
  Tensor x2 = add(x1, linear(hidden, params.ffn_w2, params.ffn_b2));

  // Mean over the four tokens.
  Tensor pooled = scale(matmul(Tensor::full({1, 4}, 1.0), x2), 0.25);
  result.fused = reshape(pooled, {D});
  return result;
}

FusionResult fuse_views(std::span<const Tensor, 4> features, const FusionParams& params) {
  static constexpr std::array<bool, 4> kAll{true, true, true, true};
  return fuse_views(features, kAll, params);
}

}  // namespace vmr::encoder
