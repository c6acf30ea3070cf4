#include "vmr/hazard.hpp"

#include <array>
#include <stdexcept>
#include <string>

#include "vmr/ops.hpp"

namespace vmr::hazard {

void Label::validate(std::size_t years) const {
  const int k = static_cast<int>(years);
  if (followup_years < 1 || followup_years > k)
    throw std::invalid_argument("label: followup_years must be in 1.." + std::to_string(k));
  if (event_year) {
    if (*event_year < 1 || *event_year > k)
      throw std::invalid_argument("label: event_year must be in 1.." + std::to_string(k));
    if (*event_year > followup_years) throw std::invalid_argument("label: event_year exceeds followup_years");
  }
}

AhlParams AhlParams::init(std::size_t input_dim, std::size_t years) {
  AhlParams p;
  p.w_base = constant_parameter({input_dim, 1}, 0.0);
  p.b_base = constant_parameter({1}, 0.0);
  p.w_hazard = constant_parameter({input_dim, years}, 0.0);
  p.b_hazard = constant_parameter({years}, 0.01);
  return p;
}

vmrnn::NamedTensors AhlParams::named_tensors() const {
  return {{"w_base", w_base}, {"b_base", b_base}, {"w_hazard", w_hazard}, {"b_hazard", b_hazard}};
}

Tensor risk_input(const Tensor& history, const Tensor& r_aa) {
  if (r_aa.numel() != 1) throw ShapeError("risk_input: r_AA must be a scalar");
  const std::array<Tensor, 2> parts{history, r_aa};
  return concat(parts);
}

RiskOutput ahl_forward(const Tensor& r_tilde, const AhlParams& params) {
  const std::size_t D = params.input_dim();
  if (r_tilde.numel() != D)
    throw ShapeError("ahl_forward: input has " + std::to_string(r_tilde.numel()) + " entries, expected " +
                     std::to_string(D));
  Tensor row = reshape(r_tilde, {1, D});
  RiskOutput out;
  out.baseline = reshape(linear(row, params.w_base, params.b_base), {1});
  out.hazards = reshape(relu(linear(row, params.w_hazard, params.b_hazard)), {params.years()});
  out.cumulative = add(cumsum(out.hazards), out.baseline);
  return out;
}

std::vector<double> year_targets(const Label& label, std::size_t years) {
  std::vector<double> y(years, 0.0);
  if (label.event_year)
    for (std::size_t k = 1; k <= years; ++k) y[k - 1] = static_cast<int>(k) >= *label.event_year ? 1.0 : 0.0;
  return y;
}

std::vector<double> year_mask(const Label& label, std::size_t years) {
  std::vector<double> m(years);
  for (std::size_t k = 1; k <= years; ++k) m[k - 1] = label.observed(k) ? 1.0 : 0.0;
  return m;
}

std::size_t label_class(const Label& label, std::size_t years) {
  return label.event_year ? static_cast<std::size_t>(*label.event_year - 1) : years;
}

std::vector<double> class_weights(std::span<const Label> labels, std::size_t years) {
  std::vector<double> counts(years + 1, 0.0);
  for (const auto& l : labels) counts[label_class(l, years)] += 1.0;
  std::vector<double> w(years + 1, 1.0);
  double total = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c <= years; ++c) {
    if (counts[c] == 0.0) continue;
    w[c] = 1.0 / counts[c];
    total += w[c];
    ++present;
  }
  if (present == 0) return w;
  const double norm = static_cast<double>(present) / total;
  for (std::size_t c = 0; c <= years; ++c)
    if (counts[c] > 0.0) w[c] *= norm;
  return w;
}

Tensor risk_loss(const RiskOutput& output, const Label& label, std::span<const double> weights) {
  const std::size_t years = output.cumulative.numel();
  label.validate(years);
  if (weights.size() != years + 1)
    throw std::invalid_argument("risk_loss: expected " + std::to_string(years + 1) + " class weights");
  const double w = weights[label_class(label, years)];
  if (!(w > 0.0)) throw std::invalid_argument("risk_loss: class weights must be positive");

  const auto targets = year_targets(label, years);
  auto entry_weights = year_mask(label, years);
  double observed = 0.0;
  for (double m : entry_weights) observed += m;
  for (auto& m : entry_weights) m *= w / observed;
  return weighted_bce_with_logits(output.cumulative, targets, entry_weights);
}

Tensor pool_history(std::span<const vmrnn::VmrnnState> states) {
  if (states.empty()) throw std::invalid_argument("pool_history: no states");
  return mean_spatial(states.back().hidden);
}

}  // namespace vmr::hazard
