#include "vmr/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vmr {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_scalar(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

enum class BinaryKind { add, sub, mul };

Tensor binary(const Tensor& a, const Tensor& b, BinaryKind kind, std::string_view name) {
  const std::size_t na = a.numel(), nb = b.numel();
  const bool same = a.shape() == b.shape();
  require(same || na == 1 || nb == 1,
          std::string(name) + ": shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
              " are neither equal nor scalar");
  const Shape out_shape = (same || nb == 1) ? a.shape() : b.shape();
  const std::size_t n = std::max(na, nb);
  auto da = a.data();
  auto db = b.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = da[na == 1 ? 0 : i];
    const double y = db[nb == 1 ? 0 : i];
    switch (kind) {
      case BinaryKind::add: out[i] = x + y; break;
      case BinaryKind::sub: out[i] = x - y; break;
      case BinaryKind::mul: out[i] = x * y; break;
    }
  }
  Tensor result = make_op_output(out_shape, std::move(out), name);
  record_op(name, {a, b}, result, [a, b, kind, n, na, nb](auto g, auto gin) {
    auto da = a.data();
    auto db = b.data();
    if (auto* ga = gin[0]) {
      for (std::size_t i = 0; i < n; ++i) {
        double d = g[i];
        if (kind == BinaryKind::mul) d *= db[nb == 1 ? 0 : i];
        (*ga)[na == 1 ? 0 : i] += d;
      }
    }
    if (auto* gb = gin[1]) {
      for (std::size_t i = 0; i < n; ++i) {
        double d = g[i];
        if (kind == BinaryKind::sub) d = -d;
        if (kind == BinaryKind::mul) d *= da[na == 1 ? 0 : i];
        (*gb)[nb == 1 ? 0 : i] += d;
      }
    }
  });
  return result;
}

}  // namespace

Tensor activation(const Tensor& x, Activation kind) {
  auto v = x.data();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = v[i];
    switch (kind) {
      case Activation::silu: out[i] = a * sigmoid_scalar(a); break;
      case Activation::sigmoid: out[i] = sigmoid_scalar(a); break;
      case Activation::tanh: out[i] = std::tanh(a); break;
      case Activation::relu: out[i] = a > 0 ? a : 0.0; break;
      case Activation::softplus: out[i] = softplus_scalar(a); break;
      case Activation::exp: out[i] = std::exp(a); break;
    }
  }
  Tensor y = make_op_output(x.shape(), std::move(out), "activation");
  record_op("activation", {x}, y, [x, y, kind](auto g, auto gin) {
    auto v = x.data();
    auto o = y.data();
    auto& gx = *gin[0];
    for (std::size_t i = 0; i < v.size(); ++i) {
      double d = 0.0;
      switch (kind) {
        case Activation::silu: {
          const double s = sigmoid_scalar(v[i]);
          d = s * (1.0 + v[i] * (1.0 - s));
          break;
        }
        case Activation::sigmoid: d = o[i] * (1.0 - o[i]); break;
        case Activation::tanh: d = 1.0 - o[i] * o[i]; break;
        case Activation::relu: d = v[i] > 0 ? 1.0 : 0.0; break;
        case Activation::softplus: d = sigmoid_scalar(v[i]); break;
        case Activation::exp: d = o[i]; break;
      }
      gx[i] += g[i] * d;
    }
  });
  return y;
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::mul, "mul"); }

Tensor scale(const Tensor& x, double factor) {
  auto v = x.data();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * factor;
  Tensor y = make_op_output(x.shape(), std::move(out), "scale");
  record_op("scale", {x}, y, [factor](auto g, auto gin) {
    auto& gx = *gin[0];
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
  });
  return y;
}

Tensor add_scalar(const Tensor& x, double offset) {
  auto v = x.data();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] + offset;
  Tensor y = make_op_output(x.shape(), std::move(out), "add_scalar");
  record_op("add_scalar", {x}, y, [](auto g, auto gin) {
    auto& gx = *gin[0];
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
  return y;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2, "matmul: operands must be rank 2");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, "matmul: inner dims differ, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  auto da = a.data();
  auto db = b.data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = da[i * k + p];
      const double* brow = db.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += s * brow[j];
    }
  }
  Tensor y = make_op_output({m, n}, std::move(out), "matmul");
  record_op("matmul", {a, b}, y, [a, b, m, k, n](auto g, auto gin) {
    auto da = a.data();
    auto db = b.data();
    if (auto* ga = gin[0]) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * db[p * n + j];
          (*ga)[i * k + p] += acc;
        }
    }
    if (auto* gb = gin[1]) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double s = da[i * k + p];
          if (s == 0.0) continue;
          double* grow = gb->data() + p * n;
          for (std::size_t j = 0; j < n; ++j) grow[j] += s * g[i * n + j];
        }
    }
  });
  return y;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  require(x.rank() == 2 && w.rank() == 2, "linear: x and w must be rank 2");
  const std::size_t m = x.dim(0), k = x.dim(1), n = w.dim(1);
  require(w.dim(0) == k, "linear: " + shape_str(x.shape()) + " x " + shape_str(w.shape()));
  require(bias.numel() == n, "linear: bias length must be " + std::to_string(n));
  auto dx = x.data();
  auto dw = w.data();
  auto db = bias.data();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    std::copy(db.begin(), db.end(), row);
    for (std::size_t p = 0; p < k; ++p) {
      const double s = dx[i * k + p];
      if (s == 0.0) continue;
      const double* wrow = dw.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += s * wrow[j];
    }
  }
  Tensor y = make_op_output({m, n}, std::move(out), "linear");
  record_op("linear", {x, w, bias}, y, [x, w, m, k, n](auto g, auto gin) {
    auto dx = x.data();
    auto dw = w.data();
    if (auto* gx = gin[0]) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          const double* wrow = dw.data() + p * n;
          const double* grow = g.data() + i * n;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * wrow[j];
          (*gx)[i * k + p] += acc;
        }
    }
    if (auto* gw = gin[1]) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double s = dx[i * k + p];
          if (s == 0.0) continue;
          double* wrow = gw->data() + p * n;
          const double* grow = g.data() + i * n;
          for (std::size_t j = 0; j < n; ++j) wrow[j] += s * grow[j];
        }
    }
    if (auto* gb = gin[2]) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*gb)[j] += g[i * n + j];
    }
  });
  return y;
}

Tensor transpose(const Tensor& x) {
  require(x.rank() == 2, "transpose: rank 2 required");
  const std::size_t r = x.dim(0), c = x.dim(1);
  std::vector<std::size_t> idx(r * c);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < r; ++j) idx[i * r + j] = j * c + i;
  return gather(x, std::move(idx), {c, r});
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
  require(x.rank() == 3, "add_channel_bias: x must be C x H x W");
  const std::size_t C = x.dim(0), hw = x.dim(1) * x.dim(2);
  require(bias.numel() == C, "add_channel_bias: channel count mismatch");
  auto dx = x.data();
  auto db = bias.data();
  std::vector<double> out(dx.size());
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < hw; ++i) out[c * hw + i] = dx[c * hw + i] + db[c];
  Tensor y = make_op_output(x.shape(), std::move(out), "add_channel_bias");
  record_op("add_channel_bias", {x, bias}, y, [C, hw](auto g, auto gin) {
    if (auto* gx = gin[0])
      for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
    if (auto* gb = gin[1])
      for (std::size_t c = 0; c < C; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < hw; ++i) acc += g[c * hw + i];
        (*gb)[c] += acc;
      }
  });
  return y;
}

Tensor avgpool2x2(const Tensor& x) {
  require(x.rank() == 3, "avgpool2x2: x must be C x H x W");
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  require(H % 2 == 0 && W % 2 == 0, "avgpool2x2: spatial dims must be even, got " + shape_str(x.shape()));
  const std::size_t h = H / 2, w = W / 2;
  auto dx = x.data();
  std::vector<double> out(C * h * w);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const double* base = dx.data() + c * H * W + 2 * i * W + 2 * j;
        out[(c * h + i) * w + j] = 0.25 * (base[0] + base[1] + base[W] + base[W + 1]);
      }
  Tensor y = make_op_output({C, h, w}, std::move(out), "avgpool2x2");
  record_op("avgpool2x2", {x}, y, [C, H, W, h, w](auto g, auto gin) {
    auto& gx = *gin[0];
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
          const double d = 0.25 * g[(c * h + i) * w + j];
          double* base = gx.data() + c * H * W + 2 * i * W + 2 * j;
          base[0] += d;
          base[1] += d;
          base[W] += d;
          base[W + 1] += d;
        }
  });
  return y;
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require(x.rank() >= 1, "layernorm: empty shape");
  const std::size_t C = x.shape().back();
  require(C > 0, "layernorm: normalized axis is empty");
  require(gamma.numel() == C && beta.numel() == C, "layernorm: gamma/beta must have " + std::to_string(C) + " entries");
  const std::size_t rows = x.numel() / C;
  auto dx = x.data();
  auto dg = gamma.data();
  auto dbeta = beta.data();
  std::vector<double> out(dx.size());
  std::vector<double> xhat(dx.size());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = dx.data() + r * C;
    double mu = 0.0;
    for (std::size_t c = 0; c < C; ++c) mu += row[c];
    mu /= static_cast<double>(C);
    double var = 0.0;
    for (std::size_t c = 0; c < C; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<double>(C);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t c = 0; c < C; ++c) {
      const double xh = (row[c] - mu) * is;
      xhat[r * C + c] = xh;
      out[r * C + c] = dg[c] * xh + dbeta[c];
    }
  }
  Tensor y = make_op_output(x.shape(), std::move(out), "layernorm");
  record_op("layernorm", {x, gamma, beta}, y,
            [gamma, xhat = std::move(xhat), inv_std = std::move(inv_std), rows, C](auto g, auto gin) {
              auto dg = gamma.data();
              if (auto* gx = gin[0]) {
                for (std::size_t r = 0; r < rows; ++r) {
                  double m1 = 0.0, m2 = 0.0;
                  for (std::size_t c = 0; c < C; ++c) {
                    const double d = g[r * C + c] * dg[c];
                    m1 += d;
                    m2 += d * xhat[r * C + c];
                  }
                  m1 /= static_cast<double>(C);
                  m2 /= static_cast<double>(C);
                  for (std::size_t c = 0; c < C; ++c) {
                    const double d = g[r * C + c] * dg[c];
                    (*gx)[r * C + c] += inv_std[r] * (d - m1 - xhat[r * C + c] * m2);
                  }
                }
              }
              if (auto* gg = gin[1])
                for (std::size_t i = 0; i < rows * C; ++i) (*gg)[i % C] += g[i] * xhat[i];
              if (auto* gb = gin[2])
                for (std::size_t i = 0; i < rows * C; ++i) (*gb)[i % C] += g[i];
            });
  return y;
}

Tensor softmax_rows(const Tensor& x) {
  require(x.rank() == 2, "softmax_rows: rank 2 required");
  const std::size_t m = x.dim(0), n = x.dim(1);
  auto dx = x.data();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = dx.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (out[i * n + j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= z;
  }
  Tensor y = make_op_output({m, n}, std::move(out), "softmax_rows");
  record_op("softmax_rows", {x}, y, [y, m, n](auto g, auto gin) {
    auto p = y.data();
    auto& gx = *gin[0];
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * p[i * n + j];
      for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += p[i * n + j] * (g[i * n + j] - dot);
    }
  });
  return y;
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  Tensor y = make_op_output({1}, {acc}, "sum");
  record_op("sum", {x}, y, [](auto g, auto gin) {
    auto& gx = *gin[0];
    for (auto& v : gx) v += g[0];
  });
  return y;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor mean_spatial(const Tensor& x) {
  require(x.rank() == 3, "mean_spatial: x must be C x H x W");
  const std::size_t C = x.dim(0), hw = x.dim(1) * x.dim(2);
  auto dx = x.data();
  std::vector<double> out(C);
  for (std::size_t c = 0; c < C; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < hw; ++i) acc += dx[c * hw + i];
    out[c] = acc / static_cast<double>(hw);
  }
  Tensor y = make_op_output({C}, std::move(out), "mean_spatial");
  record_op("mean_spatial", {x}, y, [C, hw](auto g, auto gin) {
    auto& gx = *gin[0];
    for (std::size_t c = 0; c < C; ++c) {
      const double d = g[c] / static_cast<double>(hw);
      for (std::size_t i = 0; i < hw; ++i) gx[c * hw + i] += d;
    }
  });
  return y;
}

Tensor cumsum(const Tensor& x) {
  auto dx = x.data();
  std::vector<double> out(dx.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < dx.size(); ++i) out[i] = (acc += dx[i]);
  Tensor y = make_op_output(x.shape(), std::move(out), "cumsum");
  record_op("cumsum", {x}, y, [](auto g, auto gin) {
    auto& gx = *gin[0];
    double acc = 0.0;
    for (std::size_t i = g.size(); i-- > 0;) gx[i] += (acc += g[i]);
  });
  return y;
}

Tensor reshape(const Tensor& x, Shape shape) {
  require(numel_of(shape) == x.numel(), "reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  auto dx = x.data();
  Tensor y = make_op_output(std::move(shape), std::vector<double>(dx.begin(), dx.end()), "reshape");
  record_op("reshape", {x}, y, [](auto g, auto gin) {
    auto& gx = *gin[0];
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
  return y;
}

Tensor gather(const Tensor& x, std::vector<std::size_t> indices, Shape shape) {
  require(numel_of(shape) == indices.size(), "gather: index count does not match output shape");
  auto dx = x.data();
  std::vector<double> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] < dx.size(), "gather: index out of range");
    out[i] = dx[indices[i]];
  }
  Tensor y = make_op_output(std::move(shape), std::move(out), "gather");
  record_op("gather", {x}, y, [idx = std::move(indices)](auto g, auto gin) {
    auto& gx = *gin[0];
    for (std::size_t i = 0; i < idx.size(); ++i) gx[idx[i]] += g[i];
  });
  return y;
}

Tensor concat(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat: no inputs");
  std::vector<double> out;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(out.size());
    auto d = p.data();
    out.insert(out.end(), d.begin(), d.end());
  }
  const std::size_t n = out.size();
  Tensor y = make_op_output({n}, std::move(out), "concat");
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  record_op("concat", inputs, y, [offsets = std::move(offsets)](auto g, auto gin) {
    for (std::size_t k = 0; k < gin.size(); ++k) {
      if (!gin[k]) continue;
      auto& gk = *gin[k];
      for (std::size_t i = 0; i < gk.size(); ++i) gk[i] += g[offsets[k] + i];
    }
  });
  return y;
}

Tensor channel_norm(const Tensor& x) {
  require(x.rank() == 3, "channel_norm: x must be C x H x W");
  const std::size_t C = x.dim(0), hw = x.dim(1) * x.dim(2);
  auto dx = x.data();
  std::vector<double> out(hw);
  for (std::size_t i = 0; i < hw; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < C; ++c) acc += dx[c * hw + i] * dx[c * hw + i];
    out[i] = std::sqrt(acc);
  }
  Tensor y = make_op_output({x.dim(1), x.dim(2)}, std::move(out), "channel_norm");
  record_op("channel_norm", {x}, y, [x, y, C, hw](auto g, auto gin) {
    auto dx = x.data();
    auto n = y.data();
    auto& gx = *gin[0];
    for (std::size_t i = 0; i < hw; ++i) {
      // Subgradient zero at the origin.
      if (n[i] == 0.0) continue;
      const double s = g[i] / n[i];
      for (std::size_t c = 0; c < C; ++c) gx[c * hw + i] += s * dx[c * hw + i];
    }
  });
  return y;
}

Tensor weighted_bce_with_logits(const Tensor& logits, std::span<const double> targets,
                                std::span<const double> weights) {
  const std::size_t n = logits.numel();
  require(targets.size() == n && weights.size() == n, "weighted_bce_with_logits: length mismatch");
  auto z = logits.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] == 0.0) continue;
    const double zi = z[i];
    acc += weights[i] * (std::max(zi, 0.0) - zi * targets[i] + std::log1p(std::exp(-std::abs(zi))));
  }
  Tensor y = make_op_output({1}, {acc}, "weighted_bce_with_logits");
  record_op("weighted_bce_with_logits", {logits}, y,
            [logits, t = std::vector<double>(targets.begin(), targets.end()),
             w = std::vector<double>(weights.begin(), weights.end())](auto g, auto gin) {
              auto z = logits.data();
              auto& gz = *gin[0];
              for (std::size_t i = 0; i < t.size(); ++i) {
                if (w[i] == 0.0) continue;
                gz[i] += g[0] * w[i] * (sigmoid_scalar(z[i]) - t[i]);
              }
            });
  return y;
}

Tensor to_tokens(const Tensor& x) {
  require(x.rank() == 3, "to_tokens: x must be C x H x W");
  const std::size_t C = x.dim(0), hw = x.dim(1) * x.dim(2);
  std::vector<std::size_t> idx(C * hw);
  for (std::size_t p = 0; p < hw; ++p)
    for (std::size_t c = 0; c < C; ++c) idx[p * C + c] = c * hw + p;
  return gather(x, std::move(idx), {hw, C});
}

Tensor from_tokens(const Tensor& tokens, std::size_t height, std::size_t width) {
  require(tokens.rank() == 2 && tokens.dim(0) == height * width, "from_tokens: token count mismatch");
  const std::size_t C = tokens.dim(1), hw = height * width;
  std::vector<std::size_t> idx(C * hw);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t p = 0; p < hw; ++p) idx[c * hw + p] = p * C + c;
  return gather(tokens, std::move(idx), {C, height, width});
}

Tensor flip_width(const Tensor& x) {
  require(x.rank() == 3, "flip_width: x must be C x H x W");
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  std::vector<std::size_t> idx(C * H * W);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) idx[(c * H + h) * W + w] = (c * H + h) * W + (W - 1 - w);
  return gather(x, std::move(idx), x.shape());
}

}  // namespace vmr
