#pragma once

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vmr/random.hpp"
#include "vmr/ssm.hpp"
#include "vmr/tensor.hpp"

// Vision-Mamba recurrent block: linear fusion of the exam feature with the
// previous hidden map, 2x2 patch merging, a VSS gate at the coarse scale,
// the LSTM-like cell update, then patch expansion and a 1x1 reconstruction.

namespace vmr::vmrnn {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

struct VmrnnConfig {
  std::size_t feature_dim = 64;  // length of the fused exam feature
  std::size_t channels = 8;      // full-scale hidden channels
  std::size_t height = 8;
  std::size_t width = 8;
  std::size_t state_dim = 8;  // S6 state size

  std::size_t coarse_channels() const { return 2 * channels; }
  std::size_t coarse_height() const { return height / 2; }
  std::size_t coarse_width() const { return width / 2; }
  /// fused feature + flattened hidden + interval + present flag
  std::size_t lp_inputs() const { return feature_dim + channels * height * width + 2; }
  void validate() const;
};

/// Parameters of the VSS gating block.
struct VssParams {
  Tensor dw_kernel;  // [C x 3 x 3]
  Tensor dw_bias;    // [C]
  std::array<ssm::SsmParams, 4> scans;
  Tensor ln_gamma;  // [C]
  Tensor ln_beta;   // [C]

  static VssParams init(std::size_t channels, std::size_t state_dim, Rng& rng);
  std::size_t channels() const { return ln_gamma.numel(); }
  void append_named(const std::string& prefix, NamedTensors& out) const;
};

struct VssOutput {
  Tensor y;     // pre-gate feature
  Tensor gate;  // sigmoid(y)
};

/// A1 = SiLU(DWConv(A)); four directional S6 passes over A1; A3 =
/// LayerNorm(merge); Y = A3 + SiLU(A); F = sigmoid(Y).
VssOutput vss_forward(const Tensor& x, const VssParams& params);

struct VmrnnState {
  Tensor hidden;
  Tensor cell;
  std::size_t t = 0;

  static VmrnnState zeros(std::size_t channels, std::size_t height, std::size_t width);
};

/// C_t = F * (tanh(Y) + C_{t-1}),  H_t = F * tanh(C_t)
VmrnnState cell_step(const VmrnnState& prev, const VssOutput& vss);

struct BlockParams {
  VmrnnConfig config;
  Tensor lp_weight;  // [lp_inputs x C*H*W]
  Tensor lp_bias;    // [C*H*W]
  Tensor down_weight;  // [4C x 2C]
  Tensor down_bias;    // [2C]
  VssParams vss;       // at 2C channels
  Tensor up_weight;    // [2C x 4C]
  Tensor up_bias;      // [4C]
  Tensor recon_weight;  // [C x C]
  Tensor recon_bias;    // [C]

  static BlockParams init(const VmrnnConfig& config, Rng& rng);
  NamedTensors named_tensors() const;
};

/// X_t = LP(T_t, H_{t-1}); the interval and present flag enter as scalars.
Tensor lp_fuse(const Tensor& fused, const Tensor& hidden_prev, double delta_t_years, bool present,
               const Tensor& weight, const Tensor& bias, const VmrnnConfig& config);

/// [C x H x W] -> [2C x H/2 x W/2]
Tensor patch_merge(const Tensor& x, const Tensor& weight, const Tensor& bias);
/// [2C x h x w] -> [C x 2h x 2w]
Tensor patch_expand(const Tensor& x, const Tensor& weight, const Tensor& bias);
/// 1x1 linear over channels.
Tensor pointwise(const Tensor& x, const Tensor& weight, const Tensor& bias);

struct StepInput {
  Tensor fused;  // [feature_dim]
  double delta_t_years = 1.0;
  bool present = true;
};

struct BlockResult {
  Tensor output;                    // reconstructed [C x H x W] after the last step
  std::vector<VmrnnState> states;   // coarse-scale state after each step
  std::vector<Tensor> outputs;      // reconstructed map after each step
};

/// Missing steps leave both the recurrent state and the reconstructed map
/// untouched.
BlockResult vmrnn_block_forward(std::span<const StepInput> steps, const BlockParams& params);

}  // namespace vmr::vmrnn
