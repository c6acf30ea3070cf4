#include <cmath>
#include <stdexcept>
#include <string>

#include "vmr/encoder.hpp"
#include "vmr/ops.hpp"

namespace vmr::encoder {

std::string_view to_string(View view) {
  switch (view) {
    case View::lcc: return "LCC";
    case View::rcc: return "RCC";
    case View::lmlo: return "LMLO";
    case View::rmlo: return "RMLO";
  }
  return "?";
}

View view_from_string(std::string_view name) {
  for (auto v : kViews)
    if (to_string(v) == name) return v;
  throw std::invalid_argument("unknown view '" + std::string(name) + "'");
}

EncoderParams EncoderParams::init(const EncoderConfig& config, Rng& rng) {
  if (config.image_size == 0 || config.image_size % 8)
    throw std::invalid_argument("encoder: image size must be a positive multiple of 8");
  EncoderParams p;
  p.config = config;
  std::size_t cin = 1;
  for (std::size_t s = 0; s < 3; ++s) {
    const std::size_t cout = config.stage_channels[s];
    const double bound = std::sqrt(6.0 / static_cast<double>(9 * cin));
    p.weight[s] = uniform_parameter({cout, cin, 3, 3}, bound, rng);
    p.bias[s] = constant_parameter({cout}, 0.0);
    cin = cout;
  }
  return p;
}

vmrnn::NamedTensors EncoderParams::named_tensors() const {
  vmrnn::NamedTensors out;
  for (std::size_t s = 0; s < 3; ++s) {
    out.emplace_back("conv" + std::to_string(s) + ".weight", weight[s]);
    out.emplace_back("conv" + std::to_string(s) + ".bias", bias[s]);
  }
  return out;
}

Tensor encode_view(const Tensor& image, const EncoderParams& params, bool right_side) {
  const std::size_t S = params.config.image_size;
  if (image.shape() != Shape{1, S, S})
    throw ShapeError("encode_view: expected image [1 x " + std::to_string(S) + " x " + std::to_string(S) + "], got " +
                     shape_str(image.shape()));
  for (double v : image.data())
    if (v < 0.0 || v > 1.0) throw std::domain_error("encode_view: pixel values must lie in [0, 1]");

  Tensor x = right_side ? flip_width(image) : image;
  for (std::size_t s = 0; s < 3; ++s) x = avgpool2x2(silu(conv3x3(x, params.weight[s], params.bias[s])));
  return right_side ? flip_width(x) : x;
}

}  // namespace vmr::encoder
