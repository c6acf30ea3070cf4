#include <cmath>

#include "vmr/ops.hpp"
#include "vmr/ssm.hpp"

namespace vmr::ssm {

SsmParams SsmParams::init(std::size_t channels, std::size_t state_dim, Rng& rng) {
  SsmParams p;
  p.channels = channels;
  p.state_dim = state_dim;

  // -exp(a_log) spans [-1, -N] across the state index.
  std::vector<double> a_log(channels * state_dim);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t n = 0; n < state_dim; ++n) a_log[c * state_dim + n] = std::log(static_cast<double>(n + 1));
  p.a_log = Tensor::parameter({channels, state_dim}, std::move(a_log));

  p.d_skip = constant_parameter({channels}, 1.0);
  const double bound = 1.0 / std::sqrt(static_cast<double>(channels));
  p.w_b = uniform_parameter({channels, state_dim}, bound, rng);
  p.w_c = uniform_parameter({channels, state_dim}, bound, rng);
  p.w_dt_down = uniform_parameter({channels, 1}, bound, rng);
  p.w_dt_up = uniform_parameter({1, channels}, 1.0, rng);

  // softplus(dt_bias) log-uniform in [1e-3, 1e-1].
  std::uniform_real_distribution<double> log_dt(std::log(1e-3), std::log(1e-1));
  std::vector<double> bias(channels);
  for (auto& b : bias) b = std::log(std::expm1(std::exp(log_dt(rng))));
  p.dt_bias = Tensor::parameter({channels}, std::move(bias));
  return p;
}

std::vector<Tensor> SsmParams::tensors() const { return {a_log, d_skip, w_b, w_c, w_dt_down, w_dt_up, dt_bias}; }

Projection project(const SsmParams& params, const Tensor& u) {
  if (u.rank() != 2 || u.dim(1) != params.channels)
    throw ShapeError("s6: input must be L x " + std::to_string(params.channels) + ", got " + shape_str(u.shape()));
  Projection out;
  out.a = scale(exp(params.a_log), -1.0);
  out.b = matmul(u, params.w_b);
  out.c = matmul(u, params.w_c);
  out.delta = softplus(linear(matmul(u, params.w_dt_down), params.w_dt_up, params.dt_bias));
  return out;
}

Tensor selective_scan(const Tensor& u, const Tensor& delta, const Tensor& a, const Tensor& b, const Tensor& c,
                      const Tensor& d) {
  if (u.rank() != 2 || a.rank() != 2) throw ShapeError("selective_scan: u and a must be rank 2");
  const std::size_t L = u.dim(0), C = u.dim(1), N = a.dim(1);
  if (delta.shape() != u.shape() || a.dim(0) != C || b.shape() != Shape{L, N} || c.shape() != Shape{L, N} ||
      d.numel() != C) {
    throw ShapeError("selective_scan: operand shapes inconsistent with u " + shape_str(u.shape()));
  }
  auto du = u.data();
  auto ddt = delta.data();
  auto da = a.data();
  auto db = b.data();
  auto dc = c.data();
  auto dd = d.data();
  for (double v : ddt)
    if (!(v > 0.0)) throw std::domain_error("selective_scan: step size must be positive");

  // States after every step are kept for the backward pass.
  std::vector<double> states((L + 1) * C * N, 0.0);
  std::vector<double> y(L * C);
  for (std::size_t t = 0; t < L; ++t) {
    const double* prev = states.data() + t * C * N;
    double* cur = states.data() + (t + 1) * C * N;
    for (std::size_t ch = 0; ch < C; ++ch) {
      const double dt = ddt[t * C + ch];
      const double ut = du[t * C + ch];
      double acc = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const std::size_t i = ch * N + n;
        cur[i] = std::exp(dt * da[i]) * prev[i] + (dt * db[t * N + n]) * ut;
        acc += dc[t * N + n] * cur[i];
      }
      y[t * C + ch] = acc + dd[ch] * ut;
    }
  }

  Tensor out = make_op_output({L, C}, std::move(y), "selective_scan");
  record_op("selective_scan", {u, delta, a, b, c, d}, out,
            [u, delta, a, b, c, d, states = std::move(states), L, C, N](auto g, auto gin) {
              auto du = u.data();
              auto ddt = delta.data();
              auto da = a.data();
              auto db = b.data();
              auto dc = c.data();
              auto dd = d.data();
              auto* gu = gin[0];
              auto* gdt = gin[1];
              auto* ga = gin[2];
              auto* gb = gin[3];
              auto* gc = gin[4];
              auto* gd = gin[5];

              // dh carries dL/dh_t backwards through time.
              std::vector<double> dh(C * N, 0.0);
              for (std::size_t t = L; t-- > 0;) {
                const double* prev = states.data() + t * C * N;
                const double* cur = states.data() + (t + 1) * C * N;
                for (std::size_t ch = 0; ch < C; ++ch) {
                  const double gy = g[t * C + ch];
                  const double dt = ddt[t * C + ch];
                  const double ut = du[t * C + ch];
                  if (gd) (*gd)[ch] += gy * ut;
                  double gut = gy * dd[ch];
                  double gdt_acc = 0.0;
                  for (std::size_t n = 0; n < N; ++n) {
                    const std::size_t i = ch * N + n;
                    if (gc) (*gc)[t * N + n] += gy * cur[i];
                    const double dhi = dh[i] + gy * dc[t * N + n];
                    const double abar = std::exp(dt * da[i]);
                    const double bn = db[t * N + n];
                    // h_t = abar * h_{t-1} + dt * b * u
                    const double d_abar = dhi * prev[i];
                    gdt_acc += d_abar * abar * da[i] + dhi * bn * ut;
                    if (ga) (*ga)[i] += d_abar * abar * dt;
                    if (gb) (*gb)[t * N + n] += dhi * dt * ut;
                    gut += dhi * dt * bn;
                    dh[i] = dhi * abar;
                  }
                  if (gu) (*gu)[t * C + ch] += gut;
                  if (gdt) (*gdt)[t * C + ch] += gdt_acc;
                }
              }
            });
  return out;
}

Tensor s6_forward(const SsmParams& params, const Tensor& u) {
  auto proj = project(params, u);
  return selective_scan(u, proj.delta, proj.a, proj.b, proj.c, params.d_skip);
}

namespace {

template <class Fn>
Tensor run_raw(const SsmParams& params, const Tensor& u, Fn&& scan) {
  Projection proj;
  {
    NoGradScope no_grad;
    proj = project(params, u);
  }
  ScanProblem<double> p;
  p.length = u.dim(0);
  p.channels = params.channels;
  p.state_dim = params.state_dim;
  p.u = u.data();
  p.delta = proj.delta.data();
  p.a = proj.a.data();
  p.b = proj.b.data();
  p.c = proj.c.data();
  p.d = params.d_skip.data();
  return Tensor({p.length, p.channels}, scan(p));
}

}  // namespace

Tensor selective_scan_seq(const SsmParams& params, const Tensor& u) {
  return run_raw(params, u, [](const ScanProblem<double>& p) { return selective_scan_seq(p); });
}

Tensor selective_scan_par(const SsmParams& params, const Tensor& u, std::size_t chunk, int threads) {
  return run_raw(params, u,
                 [chunk, threads](const ScanProblem<double>& p) { return selective_scan_par(p, chunk, threads); });
}

}  // namespace vmr::ssm
