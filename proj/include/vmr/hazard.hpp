#pragma once

#include <optional>
#include <span>
#include <vector>

#include "vmr/random.hpp"
#include "vmr/tensor.hpp"
#include "vmr/vmrnn.hpp"

// Additive hazard head. For R = [history embedding, r_AA]:
//   B(R)   = Linear_B(R)
//   H_k(R) = ReLU(Linear_k(R)),       k = 0 .. K-1
//   P_k    = B(R) + sum_{i<k} H_i(R), k = 1 .. K
// P is an additive risk score; the loss reads it through a sigmoid.

namespace vmr::hazard {

inline constexpr std::size_t kYears = 5;

struct Label {
  std::optional<int> event_year;  // 1..K, none when no event was observed
  int followup_years = static_cast<int>(kYears);

  bool censored() const { return !event_year.has_value(); }
  /// Year k (1-based) carries a target iff k <= followup_years.
  bool observed(std::size_t year) const { return static_cast<int>(year) <= followup_years; }
  /// Throws std::invalid_argument on an inconsistent label.
  void validate(std::size_t years = kYears) const;
};

struct AhlParams {
  Tensor w_base;    // [D x 1]
  Tensor b_base;    // [1]
  Tensor w_hazard;  // [D x K], one column per year head
  Tensor b_hazard;  // [K]

  /// Zero weights so an untrained head ranks every subject equally; the
  /// hazard biases start slightly positive to keep the ReLUs live.
  static AhlParams init(std::size_t input_dim, std::size_t years = kYears);
  std::size_t input_dim() const { return w_base.dim(0); }
  std::size_t years() const { return b_hazard.numel(); }
  vmrnn::NamedTensors named_tensors() const;
};

struct RiskOutput {
  Tensor baseline;    // [1]
  Tensor hazards;     // [K], non-negative
  Tensor cumulative;  // [K], P_1 .. P_K
};

/// R~ = concat[history, r_AA]
Tensor risk_input(const Tensor& history, const Tensor& r_aa);

RiskOutput ahl_forward(const Tensor& r_tilde, const AhlParams& params);

std::vector<double> year_targets(const Label& label, std::size_t years = kYears);
std::vector<double> year_mask(const Label& label, std::size_t years = kYears);

/// Class index: event year - 1, or K for subjects without an event.
std::size_t label_class(const Label& label, std::size_t years = kYears);

/// Inverse class frequency over K+1 classes, normalized to mean 1 over the
/// classes that occur. Absent classes get weight 1.
std::vector<double> class_weights(std::span<const Label> labels, std::size_t years = kYears);

/// Class-weighted binary cross-entropy of sigmoid(P_k) against 1{event <= k},
/// averaged over the observed years.
Tensor risk_loss(const RiskOutput& output, const Label& label, std::span<const double> weights);

/// Global average pool of the last hidden state: [C x H x W] -> [C].
Tensor pool_history(std::span<const vmrnn::VmrnnState> states);

}  // namespace vmr::hazard
