#include <cmath>
#include <stdexcept>
#include <string>

#include <omp.h>

#include "vmr/ssm.hpp"

namespace vmr::ssm {

template <class T>
void ScanProblem<T>::validate() const {
  const std::size_t L = length, C = channels, N = state_dim;
  if (L == 0 || C == 0 || N == 0) throw ShapeError("scan: length, channels and state_dim must be positive");
  if (u.size() != L * C || delta.size() != L * C || a.size() != C * N || b.size() != L * N ||
      c.size() != L * N || d.size() != C) {
    throw ShapeError("scan: operand sizes do not match L=" + std::to_string(L) + " C=" + std::to_string(C) +
                     " N=" + std::to_string(N));
  }
}

template struct ScanProblem<float>;
template struct ScanProblem<double>;

Discretized discretize(std::span<const double> a, std::span<const double> b, std::span<const double> delta,
                       std::size_t channels, std::size_t state_dim) {
  if (a.size() != channels * state_dim || b.size() != channels * state_dim || delta.size() != channels)
    throw ShapeError("discretize: operand sizes do not match C x N");
  Discretized out{std::vector<double>(a.size()), std::vector<double>(a.size())};
  for (std::size_t c = 0; c < channels; ++c) {
    if (!(delta[c] > 0.0)) throw std::domain_error("discretize: step size must be positive");
    for (std::size_t n = 0; n < state_dim; ++n) {
      out.a_bar[c * state_dim + n] = std::exp(delta[c] * a[c * state_dim + n]);
      out.b_bar[c * state_dim + n] = delta[c] * b[c * state_dim + n];
    }
  }
  return out;
}

namespace {

// One recurrence step for a (channel, state) cell; shared by both scans so a
// single-chunk parallel scan reproduces the sequential one bit for bit.
template <class T>
inline T step(T h, T dt, T a, T b, T u) {
  return std::exp(dt * a) * h + (dt * b) * u;
}

// Runs rows [t0, t1) of channel c from state h, writing y.
template <class T>
void run_channel(const ScanProblem<T>& p, std::size_t c, std::size_t t0, std::size_t t1, T* h, T* y) {
  const std::size_t C = p.channels, N = p.state_dim;
  for (std::size_t t = t0; t < t1; ++t) {
    const T dt = p.delta[t * C + c];
    const T ut = p.u[t * C + c];
    T acc = T(0);
    for (std::size_t n = 0; n < N; ++n) {
      h[n] = step(h[n], dt, p.a[c * N + n], p.b[t * N + n], ut);
      acc += p.c[t * N + n] * h[n];
    }
    y[t * C + c] = acc + p.d[c] * ut;
  }
}

}  // namespace

template <class T>
std::vector<T> selective_scan_seq(const ScanProblem<T>& p) {
  p.validate();
  const std::size_t L = p.length, C = p.channels, N = p.state_dim;
  std::vector<T> y(L * C);
  std::vector<T> h(C * N, T(0));
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      const T dt = p.delta[t * C + c];
      const T ut = p.u[t * C + c];
      T acc = T(0);
      for (std::size_t n = 0; n < N; ++n) {
        T& hn = h[c * N + n];
        hn = step(hn, dt, p.a[c * N + n], p.b[t * N + n], ut);
        acc += p.c[t * N + n] * hn;
      }
      y[t * C + c] = acc + p.d[c] * ut;
    }
  }
  return y;
}

template <class T>
std::vector<T> selective_scan_par(const ScanProblem<T>& p, std::size_t chunk, int threads) {
  if (chunk == 0) throw std::invalid_argument("selective_scan_par: chunk must be positive");
  p.validate();
  const std::size_t L = p.length, C = p.channels, N = p.state_dim;
  const std::size_t chunks = (L + chunk - 1) / chunk;
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();
  const auto tasks = static_cast<std::ptrdiff_t>(chunks * C);

  // Pass 1: each (chunk, channel) summarizes its rows as one affine map.
  std::vector<T> agg_a(chunks * C * N), agg_b(chunks * C * N);
#pragma omp parallel for num_threads(nthreads) schedule(static)
  for (std::ptrdiff_t task = 0; task < tasks; ++task) {
    const std::size_t k = static_cast<std::size_t>(task) / C, c = static_cast<std::size_t>(task) % C;
    const std::size_t t0 = k * chunk, t1 = std::min(L, t0 + chunk);
    T* pa = agg_a.data() + (k * C + c) * N;
    T* pb = agg_b.data() + (k * C + c) * N;
    for (std::size_t n = 0; n < N; ++n) {
      pa[n] = T(1);
      pb[n] = T(0);
    }
    for (std::size_t t = t0; t < t1; ++t) {
      const T dt = p.delta[t * C + c];
      const T ut = p.u[t * C + c];
      for (std::size_t n = 0; n < N; ++n) {
        const T abar = std::exp(dt * p.a[c * N + n]);
        pb[n] = abar * pb[n] + (dt * p.b[t * N + n]) * ut;
        pa[n] *= abar;
      }
    }
  }

  // Exclusive prefix over chunks gives each chunk's incoming state.
  std::vector<T> carry(chunks * C * N);
  for (std::size_t i = 0; i < C * N; ++i) carry[i] = T(0);
  for (std::size_t k = 1; k < chunks; ++k) {
    for (std::size_t i = 0; i < C * N; ++i) {
      const std::size_t prev = (k - 1) * C * N + i;
      carry[k * C * N + i] = agg_a[prev] * carry[prev] + agg_b[prev];
    }
  }

  // Pass 2: replay each chunk from its incoming state.
  std::vector<T> y(L * C);
#pragma omp parallel for num_threads(nthreads) schedule(static)
  for (std::ptrdiff_t task = 0; task < tasks; ++task) {
    const std::size_t k = static_cast<std::size_t>(task) / C, c = static_cast<std::size_t>(task) % C;
    const std::size_t t0 = k * chunk, t1 = std::min(L, t0 + chunk);
    std::vector<T> h(carry.begin() + static_cast<std::ptrdiff_t>((k * C + c) * N),
                     carry.begin() + static_cast<std::ptrdiff_t>((k * C + c + 1) * N));
    run_channel(p, c, t0, t1, h.data(), y.data());
  }
  return y;
}

template std::vector<float> selective_scan_seq(const ScanProblem<float>&);
template std::vector<double> selective_scan_seq(const ScanProblem<double>&);
template std::vector<float> selective_scan_par(const ScanProblem<float>&, std::size_t, int);
template std::vector<double> selective_scan_par(const ScanProblem<double>&, std::size_t, int);

}  // namespace vmr::ssm
