#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "vmr/random.hpp"
#include "vmr/tensor.hpp"

// Selective state-space scan (S6).
//
//   h_t = exp(delta_t * A) . h_{t-1} + (delta_t * B_t) u_t
//   y_t = <C_t, h_t> + D . u_t
//
// per channel, vectorized over the state dimension. A is input-independent
// and strictly negative; B_t, C_t and delta_t are projected from u_t.

namespace vmr::ssm {

/// Raw scan operands, row-major. `a` holds the effective (negative) A.
template <class T>
struct ScanProblem {
  std::size_t length = 0;
  std::size_t channels = 0;
  std::size_t state_dim = 0;
  std::span<const T> u;      // [L x C]
  std::span<const T> delta;  // [L x C]
  std::span<const T> a;      // [C x N]
  std::span<const T> b;      // [L x N]
  std::span<const T> c;      // [L x N]
  std::span<const T> d;      // [C]

  void validate() const;
};

/// Zero-order hold on the state term, Euler on the input term.
struct Discretized {
  std::vector<double> a_bar;  // exp(delta_c * A_cn)
  std::vector<double> b_bar;  // delta_c * B_cn
};
Discretized discretize(std::span<const double> a, std::span<const double> b, std::span<const double> delta,
                       std::size_t channels, std::size_t state_dim);

template <class T>
std::vector<T> selective_scan_seq(const ScanProblem<T>& p);

/// Chunked two-pass scan over the affine maps h -> a*h + b, composed as
/// (a2, b2) o (a1, b1) = (a2*a1, a2*b1 + b2). threads <= 0 uses the OpenMP
/// default.
template <class T>
std::vector<T> selective_scan_par(const ScanProblem<T>& p, std::size_t chunk, int threads = 0);

extern template std::vector<float> selective_scan_seq(const ScanProblem<float>&);
extern template std::vector<double> selective_scan_seq(const ScanProblem<double>&);
extern template std::vector<float> selective_scan_par(const ScanProblem<float>&, std::size_t, int);
extern template std::vector<double> selective_scan_par(const ScanProblem<double>&, std::size_t, int);

/// Learned parameters of one S6 module. Delta uses a rank-one projection:
/// delta = softplus((u . w_dt_down) . w_dt_up + dt_bias).
struct SsmParams {
  std::size_t channels = 0;
  std::size_t state_dim = 0;
  Tensor a_log;      // [C x N], A = -exp(a_log)
  Tensor d_skip;     // [C]
  Tensor w_b;        // [C x N]
  Tensor w_c;        // [C x N]
  Tensor w_dt_down;  // [C x 1]
  Tensor w_dt_up;    // [1 x C]
  Tensor dt_bias;    // [C]

  static SsmParams init(std::size_t channels, std::size_t state_dim, Rng& rng);
  std::vector<Tensor> tensors() const;
};

/// Input-dependent operands of one sequence.
struct Projection {
  Tensor a;      // [C x N]
  Tensor delta;  // [L x C]
  Tensor b;      // [L x N]
  Tensor c;      // [L x N]
};
Projection project(const SsmParams& params, const Tensor& u);

/// Differentiable fused scan with an analytic backward pass.
Tensor selective_scan(const Tensor& u, const Tensor& delta, const Tensor& a, const Tensor& b, const Tensor& c,
                      const Tensor& d);

/// Projection followed by the fused scan; u is [L x C].
Tensor s6_forward(const SsmParams& params, const Tensor& u);

Tensor selective_scan_seq(const SsmParams& params, const Tensor& u);
Tensor selective_scan_par(const SsmParams& params, const Tensor& u, std::size_t chunk, int threads = 0);

// ----------------------------------------------------------------------------
// Four-directional cross scan
// ----------------------------------------------------------------------------

enum class Direction { row_forward = 0, row_reverse = 1, col_forward = 2, col_reverse = 3 };
inline constexpr std::array<Direction, 4> kDirections{Direction::row_forward, Direction::row_reverse,
                                                      Direction::col_forward, Direction::col_reverse};

/// order[i] = flat spatial index (h * W + w) visited at sequence position i.
std::vector<std::size_t> scan_order(Direction dir, std::size_t height, std::size_t width);

/// [C x H x W] -> four [(H*W) x C] sequences.
std::array<Tensor, 4> cross_scan_expand(const Tensor& x);

/// Un-permutes each [(H*W) x C] sequence to [C x H x W] and sums them.
Tensor cross_merge(std::span<const Tensor, 4> ys, std::size_t height, std::size_t width);

}  // namespace vmr::ssm
