#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vmr/config.hpp"
#include "vmr/metrics.hpp"
#include "vmr/random.hpp"
#include "vmr/tensor.hpp"

namespace vmr::testkit {

// ---------------------------------------------------------------------------
// Finite-difference gradient checks
// ---------------------------------------------------------------------------

struct GradCheckOptions {
  double step = 1e-5;
  // Entries of |analytic - numeric| / max(|analytic|, |numeric|, floor).
  double floor = 1e-4;
  // Per leaf; 0 checks every entry, otherwise a seeded random subset.
  std::size_t max_entries = 0;
  std::uint64_t seed = 1;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t entries = 0;
  std::string worst;  // "leaf[index]"
  double worst_analytic = 0.0, worst_numeric = 0.0;
};

using NamedLeaves = std::vector<std::pair<std::string, Tensor>>;

/// `loss` rebuilds a scalar from the current leaf values. Leaves are
/// perturbed in place and restored.
GradCheckReport gradcheck(const std::function<Tensor()>& loss, const NamedLeaves& leaves,
                          const GradCheckOptions& options = {});

/// sum(out * weights) with fixed random weights, so every output entry
/// reaches the loss with a distinct coefficient.
Tensor probe(const Tensor& out, std::uint64_t seed = 99);

struct GradCase {
  std::string name;
  std::function<GradCheckReport()> run;
};

/// Smallest model that exercises every component (16 px images).
harness::ModelConfig tiny_model_config();

/// Every differentiable op and composite block.
std::vector<GradCase> gradient_cases();

// ---------------------------------------------------------------------------
// Independent oracles
// ---------------------------------------------------------------------------

std::vector<double> naive_matmul(std::span<const double> a, std::span<const double> b, std::size_t m,
                                 std::size_t k, std::size_t n);
std::vector<double> naive_dwconv3x3(std::span<const double> x, std::span<const double> kernel, std::size_t c,
                                    std::size_t h, std::size_t w);

/// Per-cell channel loop: sqrt(sum_c (L[c,h,w] - R[c,h,W-1-w])^2).
std::vector<double> sad_oracle(const Tensor& left, const Tensor& right);

/// Harrell's C by direct enumeration of ordered pairs; the score of pair
/// (i, j) is read at i's event year.
std::optional<double> brute_c_index(std::span<const metrics::EvalRecord> records, std::size_t horizon);
/// Mann-Whitney by enumerating (positive, negative) pairs.
std::optional<double> brute_auc(std::span<const metrics::EvalRecord> records, std::size_t year);

/// Random labels with censoring and scores drawn from a small grid so ties
/// are common.
std::vector<metrics::EvalRecord> random_records(std::size_t n, Rng& rng);

/// Adjacent pairs with P_{k+1} < P_k over random heads and random inputs.
std::size_t random_ahl_violations(std::size_t inputs, std::uint64_t seed);

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0);
Tensor random_leaf(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0);

}  // namespace vmr::testkit
