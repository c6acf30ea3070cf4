#include "vmr/ops.hpp"
#include "vmr/vmrnn.hpp"

namespace vmr::vmrnn {

VssParams VssParams::init(std::size_t channels, std::size_t state_dim, Rng& rng) {
  VssParams p;
  p.dw_kernel = uniform_parameter({channels, 3, 3}, 1.0 / 3.0, rng);
  p.dw_bias = constant_parameter({channels}, 0.0);
  for (auto& s : p.scans) s = ssm::SsmParams::init(channels, state_dim, rng);
  p.ln_gamma = constant_parameter({channels}, 1.0);
  p.ln_beta = constant_parameter({channels}, 0.0);
  return p;
}

void VssParams::append_named(const std::string& prefix, NamedTensors& out) const {
  out.emplace_back(prefix + "dw_kernel", dw_kernel);
  out.emplace_back(prefix + "dw_bias", dw_bias);
  static constexpr std::array<const char*, 7> kScanNames{"a_log", "d_skip", "w_b", "w_c",
                                                         "w_dt_down", "w_dt_up", "dt_bias"};
  for (std::size_t v = 0; v < scans.size(); ++v) {
    auto tensors = scans[v].tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i)
      out.emplace_back(prefix + "scan" + std::to_string(v) + "." + kScanNames[i], tensors[i]);
  }
  out.emplace_back(prefix + "ln_gamma", ln_gamma);
  out.emplace_back(prefix + "ln_beta", ln_beta);
}

VssOutput vss_forward(const Tensor& x, const VssParams& params) {
  if (x.rank() != 3 || x.dim(0) != params.channels())
    throw ShapeError("vss_forward: expected " + std::to_string(params.channels()) + " x H x W, got " +
                     shape_str(x.shape()));
  const std::size_t H = x.dim(1), W = x.dim(2);

  Tensor a1 = silu(add_channel_bias(dwconv3x3(x, params.dw_kernel), params.dw_bias));
  auto sequences = ssm::cross_scan_expand(a1);
  std::array<Tensor, 4> directional;
  for (std::size_t v = 0; v < 4; ++v) directional[v] = ssm::s6_forward(params.scans[v], sequences[v]);
  Tensor merged = ssm::cross_merge(directional, H, W);
  Tensor a3 = from_tokens(layernorm(to_tokens(merged), params.ln_gamma, params.ln_beta), H, W);
  Tensor b1 = silu(x);
  Tensor y = add(a3, b1);
  return {y, sigmoid(y)};
}

VmrnnState VmrnnState::zeros(std::size_t channels, std::size_t height, std::size_t width) {
  return {Tensor::zeros({channels, height, width}), Tensor::zeros({channels, height, width}), 0};
}

VmrnnState cell_step(const VmrnnState& prev, const VssOutput& vss) {
  if (prev.cell.shape() != vss.y.shape() || vss.gate.shape() != vss.y.shape() ||
      prev.hidden.shape() != prev.cell.shape()) {
    throw ShapeError("cell_step: state " + shape_str(prev.cell.shape()) + " vs gate " + shape_str(vss.y.shape()));
  }
  Tensor cell = mul(vss.gate, add(tanh(vss.y), prev.cell));
  Tensor hidden = mul(vss.gate, tanh(cell));
  return {hidden, cell, prev.t + 1};
}

}  // namespace vmr::vmrnn
