#include <cmath>

#include "vmr/ops.hpp"
#include "vmr/vmrnn.hpp"

namespace vmr::vmrnn {

void VmrnnConfig::validate() const {
  if (feature_dim == 0 || channels == 0 || state_dim == 0) throw ShapeError("vmrnn: dimensions must be positive");
  if (height < 2 || width < 2 || height % 2 || width % 2)
    throw ShapeError("vmrnn: spatial dims must be even and at least 2");
}

namespace {
Tensor fan_in_param(std::size_t in, std::size_t out, Rng& rng) {
  return uniform_parameter({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng);
}
}  // namespace

BlockParams BlockParams::init(const VmrnnConfig& config, Rng& rng) {
  config.validate();
  BlockParams p;
  p.config = config;
  const std::size_t C = config.channels, chw = C * config.height * config.width;
  p.lp_weight = fan_in_param(config.lp_inputs(), chw, rng);
  p.lp_bias = constant_parameter({chw}, 0.0);
  p.down_weight = fan_in_param(4 * C, 2 * C, rng);
  p.down_bias = constant_parameter({2 * C}, 0.0);
  p.vss = VssParams::init(2 * C, config.state_dim, rng);
  p.up_weight = fan_in_param(2 * C, 4 * C, rng);
  p.up_bias = constant_parameter({4 * C}, 0.0);
  p.recon_weight = fan_in_param(C, C, rng);
  p.recon_bias = constant_parameter({C}, 0.0);
  return p;
}

NamedTensors BlockParams::named_tensors() const {
  NamedTensors out{{"lp_weight", lp_weight},     {"lp_bias", lp_bias},     {"down_weight", down_weight},
                   {"down_bias", down_bias}};
  vss.append_named("vss.", out);
  out.emplace_back("up_weight", up_weight);
  out.emplace_back("up_bias", up_bias);
  out.emplace_back("recon_weight", recon_weight);
  out.emplace_back("recon_bias", recon_bias);
  return out;
}

Tensor lp_fuse(const Tensor& fused, const Tensor& hidden_prev, double delta_t_years, bool present,
               const Tensor& weight, const Tensor& bias, const VmrnnConfig& config) {
  const Shape hidden_shape{config.channels, config.height, config.width};
  if (fused.numel() != config.feature_dim)
    throw ShapeError("lp_fuse: fused feature has " + std::to_string(fused.numel()) + " entries, expected " +
                     std::to_string(config.feature_dim));
  if (hidden_prev.shape() != hidden_shape)
    throw ShapeError("lp_fuse: hidden state " + shape_str(hidden_prev.shape()) + ", expected " +
                     shape_str(hidden_shape));
  const std::array<Tensor, 3> parts{fused, hidden_prev, Tensor({2}, {delta_t_years, present ? 1.0 : 0.0})};
  Tensor row = reshape(concat(parts), {1, config.lp_inputs()});
  return reshape(linear(row, weight, bias), hidden_shape);
}

Tensor patch_merge(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.rank() != 3 || x.dim(1) % 2 || x.dim(2) % 2)
    throw ShapeError("patch_merge: need C x H x W with even H, W; got " + shape_str(x.shape()));
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2), h = H / 2, w = W / 2;
  // Token (i, j) concatenates the 2x2 block in (0,0), (0,1), (1,0), (1,1) order.
  std::vector<std::size_t> idx(h * w * 4 * C);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t q = 0; q < 4; ++q)
        for (std::size_t c = 0; c < C; ++c) {
          const std::size_t y = 2 * i + q / 2, xx = 2 * j + q % 2;
          idx[((i * w + j) * 4 + q) * C + c] = (c * H + y) * W + xx;
        }
  Tensor tokens = gather(x, std::move(idx), {h * w, 4 * C});
  return from_tokens(linear(tokens, weight, bias), h, w);
}

Tensor patch_expand(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.rank() != 3) throw ShapeError("patch_expand: need C x h x w, got " + shape_str(x.shape()));
  const std::size_t h = x.dim(1), w = x.dim(2);
  Tensor tokens = linear(to_tokens(x), weight, bias);  // [hw x 4C]
  if (tokens.dim(1) % 4) throw ShapeError("patch_expand: output width must be divisible by 4");
  const std::size_t C = tokens.dim(1) / 4, H = 2 * h, W = 2 * w;
  std::vector<std::size_t> idx(C * H * W);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t xx = 0; xx < W; ++xx) {
        const std::size_t q = (y % 2) * 2 + xx % 2;
        idx[(c * H + y) * W + xx] = ((y / 2) * w + xx / 2) * 4 * C + q * C + c;
      }
  return gather(tokens, std::move(idx), {C, H, W});
}

Tensor pointwise(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return from_tokens(linear(to_tokens(x), weight, bias), x.dim(1), x.dim(2));
}

BlockResult vmrnn_block_forward(std::span<const StepInput> steps, const BlockParams& params) {
  if (steps.empty()) throw std::invalid_argument("vmrnn_block_forward: empty sequence");
  const auto& cfg = params.config;
  BlockResult result;
  VmrnnState state = VmrnnState::zeros(cfg.coarse_channels(), cfg.coarse_height(), cfg.coarse_width());
  Tensor output = Tensor::zeros({cfg.channels, cfg.height, cfg.width});
  for (const auto& step : steps) {
    if (step.present) {
      Tensor x = lp_fuse(step.fused, output, step.delta_t_years, true, params.lp_weight, params.lp_bias, cfg);
      Tensor coarse = patch_merge(x, params.down_weight, params.down_bias);
      state = cell_step(state, vss_forward(coarse, params.vss));
      output = pointwise(patch_expand(state.hidden, params.up_weight, params.up_bias), params.recon_weight,
                         params.recon_bias);
    }
    result.states.push_back(state);
    result.outputs.push_back(output);
  }
  result.output = output;
  return result;
}

}  // namespace vmr::vmrnn
