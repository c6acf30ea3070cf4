#pragma once

#include <span>
#include <vector>

#include "vmr/tensor.hpp"

// Differentiable op set. Elementwise binary ops accept either matching shapes
// or a single-element operand; no other broadcasting exists.

namespace vmr {

enum class Activation { silu, sigmoid, tanh, relu, softplus, exp };

Tensor activation(const Tensor& x, Activation kind);
inline Tensor silu(const Tensor& x) { return activation(x, Activation::silu); }
inline Tensor sigmoid(const Tensor& x) { return activation(x, Activation::sigmoid); }
inline Tensor tanh(const Tensor& x) { return activation(x, Activation::tanh); }
inline Tensor relu(const Tensor& x) { return activation(x, Activation::relu); }
inline Tensor softplus(const Tensor& x) { return activation(x, Activation::softplus); }
inline Tensor exp(const Tensor& x) { return activation(x, Activation::exp); }

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double offset);

/// [m x k] * [k x n]
Tensor matmul(const Tensor& a, const Tensor& b);
/// x[m x k] * w[k x n] + bias[n] (bias added to every row)
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);
Tensor transpose(const Tensor& x);

/// Depthwise 3x3, zero padding of width one. x[C x H x W], kernel[C x 3 x 3].
Tensor dwconv3x3(const Tensor& x, const Tensor& kernel);
/// Dense 3x3 convolution, zero padding. x[Cin x H x W], w[Cout x Cin x 3 x 3].
Tensor conv3x3(const Tensor& x, const Tensor& w, const Tensor& bias);
/// x[C x H x W] + bias[C] per channel.
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);
/// 2x2 mean pooling with stride 2; H and W must be even.
Tensor avgpool2x2(const Tensor& x);

inline constexpr double kLayerNormEps = 1e-5;
/// Normalizes over the last axis.
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = kLayerNormEps);
Tensor softmax_rows(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// [C x H x W] -> [C]
Tensor mean_spatial(const Tensor& x);
/// Inclusive prefix sum of a flat tensor.
Tensor cumsum(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);
/// out[i] = x[indices[i]]; the backward pass scatter-adds.
Tensor gather(const Tensor& x, std::vector<std::size_t> indices, Shape shape);
/// Flat concatenation.
Tensor concat(std::span<const Tensor> parts);
/// [C x H x W] -> [H x W], Euclidean norm across channels.
Tensor channel_norm(const Tensor& x);

/// Sum over entries with non-zero weight of w * BCE(sigmoid(z), y).
/// Entries with zero weight are skipped entirely, value and gradient.
Tensor weighted_bce_with_logits(const Tensor& logits, std::span<const double> targets,
                                std::span<const double> weights);

// Layout helpers built on gather.
/// [C x H x W] -> [(H*W) x C]
Tensor to_tokens(const Tensor& x);
/// [(H*W) x C] -> [C x H x W]
Tensor from_tokens(const Tensor& tokens, std::size_t height, std::size_t width);
/// Mirror along the last (width) axis of [C x H x W].
Tensor flip_width(const Tensor& x);

}  // namespace vmr
