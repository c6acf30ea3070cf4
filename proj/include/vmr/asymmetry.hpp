#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "vmr/tensor.hpp"

// Bilateral asymmetry: a per-exam spatial detector on left/right feature
// maps and a longitudinal tracker that checks whether the asymmetry peak
// stays put across exams.

namespace vmr::asym {

enum class ViewPair { cc, mlo };
std::string_view to_string(ViewPair pair);

struct AsymmetryRecord {
  std::size_t t = 0;
  double d_max = 0.0;
  std::size_t p_h = 0;
  std::size_t p_w = 0;
  ViewPair view_pair = ViewPair::cc;
};

struct SadResult {
  Tensor d_norm;  // [H x W]
  Tensor d_max;   // scalar, differentiable
  AsymmetryRecord record;
};

/// Mirrors `right` along the width axis, takes D = L - R^F per channel and
/// its channel-wise Euclidean norm. The peak uses the first maximum in
/// row-major order.
SadResult sad_compute(const Tensor& left, const Tensor& right, std::size_t t = 0, ViewPair pair = ViewPair::cc);

struct AsymmetryConfig {
  std::size_t window_side = 5;  // feature-map cells
  double alpha = 0.5;           // persistence upweight

  double displacement_threshold() const { return 0.4 * static_cast<double>(window_side); }
};

struct LongitudinalAsymmetry {
  std::vector<AsymmetryRecord> records;
  bool persistent = true;
  double r_aa = 0.0;
};

/// True iff every consecutive pair of peaks moved less than 0.4 * window_side.
bool is_persistent(std::span<const AsymmetryRecord> records, std::size_t window_side);

/// Mean peak asymmetry, scaled by (1 + alpha) when persistent across at least
/// two records.
double fuse_asymmetry(std::span<const AsymmetryRecord> records, bool persistent, double alpha);
/// Differentiable counterpart over per-exam D_max scalars.
Tensor fuse_asymmetry(std::span<const Tensor> d_max, bool persistent, double alpha);

/// Records must be sorted by t and non-empty.
LongitudinalAsymmetry lat_track(std::vector<AsymmetryRecord> records, const AsymmetryConfig& config);

}  // namespace vmr::asym
