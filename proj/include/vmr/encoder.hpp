#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "vmr/asymmetry.hpp"
#include "vmr/random.hpp"
#include "vmr/tensor.hpp"
#include "vmr/vmrnn.hpp"

// Per-view image encoder and the multi-view attention fusion that turns the
// four views of one exam into a single feature vector.

namespace vmr::encoder {

enum class View { lcc = 0, rcc = 1, lmlo = 2, rmlo = 3 };
inline constexpr std::array<View, 4> kViews{View::lcc, View::rcc, View::lmlo, View::rmlo};

std::string_view to_string(View view);
View view_from_string(std::string_view name);
inline bool is_right(View v) { return v == View::rcc || v == View::rmlo; }

struct EncoderConfig {
  std::size_t image_size = 64;
  std::array<std::size_t, 3> stage_channels{4, 8, 16};

  std::size_t out_channels() const { return stage_channels.back(); }
  std::size_t out_size() const { return image_size / 8; }
};

struct EncoderParams {
  EncoderConfig config;
  std::array<Tensor, 3> weight;  // [Cout x Cin x 3 x 3]
  std::array<Tensor, 3> bias;    // [Cout]

  static EncoderParams init(const EncoderConfig& config, Rng& rng);
  vmrnn::NamedTensors named_tensors() const;
};

/// Three stages of conv3x3 -> SiLU -> 2x2 mean pool. Right-side views run on
/// the mirrored image and are mirrored back, so a right breast stored as the
/// mirror image of its left counterpart yields the mirrored left feature map.
Tensor encode_view(const Tensor& image, const EncoderParams& params, bool right_side = false);

struct FusionConfig {
  std::size_t feature_channels = 16;
  std::size_t model_dim = 64;
  std::size_t heads = 2;
  std::size_t ffn_hidden = 128;

  std::size_t head_dim() const { return model_dim / heads; }
};

struct FusionParams {
  FusionConfig config;
  Tensor token_weight;  // [C_e x D]
  Tensor token_bias;    // [D]
  Tensor view_embed;    // [4 x D]
  Tensor absent_embed;  // [D]
  Tensor ln1_gamma, ln1_beta;
  std::vector<Tensor> wq, wk, wv;  // per head [D x d_head]
  std::vector<Tensor> wo;          // per head [d_head x D]
  Tensor out_bias;                 // [D]
  Tensor ln2_gamma, ln2_beta;
  Tensor ffn_w1, ffn_b1;  // [D x F], [F]
  Tensor ffn_w2, ffn_b2;  // [F x D], [D]

  static FusionParams init(const FusionConfig& config, Rng& rng);
  vmrnn::NamedTensors named_tensors() const;
};

struct FusionResult {
  Tensor fused;                    // [D]
  std::vector<Tensor> attention;   // per head [4 x 4]
  Tensor tokens;                   // [4 x D] input tokens
};

/// Each feature map is mean-pooled into a token plus its view embedding;
/// one pre-norm self-attention layer and feed-forward run over the four
/// tokens, which are then averaged. Absent views contribute a zero feature
/// and the absent embedding.
FusionResult fuse_views(std::span<const Tensor, 4> features, std::span<const bool, 4> present,
                        const FusionParams& params);
FusionResult fuse_views(std::span<const Tensor, 4> features, const FusionParams& params);

}  // namespace vmr::encoder
