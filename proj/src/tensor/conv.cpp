#include <string>

#include "vmr/ops.hpp"

namespace vmr {

namespace {

// out += k (*) in for one plane, zero padding of width one. Taps are applied
// in (ky, kx) order so each output accumulates exactly like a direct
// sliding-window loop.
void conv_plane(double* out, const double* in, const double* k, std::size_t H, std::size_t W) {
  for (std::size_t ky = 0; ky < 3; ++ky) {
    for (std::size_t kx = 0; kx < 3; ++kx) {
      const double wgt = k[ky * 3 + kx];
      const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - 1;
      const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - 1;
      const std::size_t x0 = dx < 0 ? 1 : 0;
      const std::size_t x1 = dx > 0 ? W - 1 : W;
      for (std::size_t y = 0; y < H; ++y) {
        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
        if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(H)) continue;
        const double* src = in + static_cast<std::size_t>(sy) * W;
        double* dst = out + y * W;
        for (std::size_t x = x0; x < x1; ++x) dst[x] += wgt * src[x + dx];
      }
    }
  }
}

// grad_in += k^T (*) grad_out
void conv_plane_input_grad(double* gin, const double* gout, const double* k, std::size_t H, std::size_t W) {
  for (std::size_t ky = 0; ky < 3; ++ky) {
    for (std::size_t kx = 0; kx < 3; ++kx) {
      const double wgt = k[ky * 3 + kx];
      const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - 1;
      const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - 1;
      const std::size_t x0 = dx < 0 ? 1 : 0;
      const std::size_t x1 = dx > 0 ? W - 1 : W;
      for (std::size_t y = 0; y < H; ++y) {
        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
        if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(H)) continue;
        double* dst = gin + static_cast<std::size_t>(sy) * W;
        const double* src = gout + y * W;
        for (std::size_t x = x0; x < x1; ++x) dst[x + dx] += wgt * src[x];
      }
    }
  }
}

// gk[tap] += sum over positions of grad_out * shifted input
void conv_plane_kernel_grad(double* gk, const double* gout, const double* in, std::size_t H, std::size_t W) {
  for (std::size_t ky = 0; ky < 3; ++ky) {
    for (std::size_t kx = 0; kx < 3; ++kx) {
      const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - 1;
      const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - 1;
      const std::size_t x0 = dx < 0 ? 1 : 0;
      const std::size_t x1 = dx > 0 ? W - 1 : W;
      double acc = 0.0;
      for (std::size_t y = 0; y < H; ++y) {
        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
        if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(H)) continue;
        const double* src = in + static_cast<std::size_t>(sy) * W;
        const double* g = gout + y * W;
        for (std::size_t x = x0; x < x1; ++x) acc += g[x] * src[x + dx];
      }
      gk[ky * 3 + kx] += acc;
    }
  }
}

}  // namespace

Tensor dwconv3x3(const Tensor& x, const Tensor& kernel) {
  if (x.rank() != 3) throw ShapeError("dwconv3x3: x must be C x H x W, got " + shape_str(x.shape()));
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  if (kernel.shape() != Shape{C, 3, 3}) {
    throw ShapeError("dwconv3x3: kernel " + shape_str(kernel.shape()) + " does not match " + std::to_string(C) +
                     " channels");
  }
  const std::size_t hw = H * W;
  auto dx = x.data();
  auto dk = kernel.data();
  std::vector<double> out(C * hw, 0.0);
  for (std::size_t c = 0; c < C; ++c) conv_plane(out.data() + c * hw, dx.data() + c * hw, dk.data() + c * 9, H, W);
  Tensor y = make_op_output(x.shape(), std::move(out), "dwconv3x3");
  record_op("dwconv3x3", {x, kernel}, y, [x, kernel, C, H, W, hw](auto g, auto gin) {
    auto dx = x.data();
    auto dk = kernel.data();
    for (std::size_t c = 0; c < C; ++c) {
      if (auto* gx = gin[0]) conv_plane_input_grad(gx->data() + c * hw, g.data() + c * hw, dk.data() + c * 9, H, W);
      if (auto* gk = gin[1]) conv_plane_kernel_grad(gk->data() + c * 9, g.data() + c * hw, dx.data() + c * hw, H, W);
    }
  });
  return y;
}

Tensor conv3x3(const Tensor& x, const Tensor& w, const Tensor& bias) {
  if (x.rank() != 3) throw ShapeError("conv3x3: x must be Cin x H x W, got " + shape_str(x.shape()));
  const std::size_t Cin = x.dim(0), H = x.dim(1), W = x.dim(2);
  if (w.rank() != 4 || w.dim(1) != Cin || w.dim(2) != 3 || w.dim(3) != 3) {
    throw ShapeError("conv3x3: weight " + shape_str(w.shape()) + " incompatible with input " + shape_str(x.shape()));
  }
  const std::size_t Cout = w.dim(0);
  if (bias.numel() != Cout) throw ShapeError("conv3x3: bias must have Cout entries");
  const std::size_t hw = H * W;
  auto dx = x.data();
  auto dw = w.data();
  auto db = bias.data();
  std::vector<double> out(Cout * hw);
  for (std::size_t co = 0; co < Cout; ++co) {
    double* plane = out.data() + co * hw;
    std::fill(plane, plane + hw, db[co]);
    for (std::size_t ci = 0; ci < Cin; ++ci)
      conv_plane(plane, dx.data() + ci * hw, dw.data() + (co * Cin + ci) * 9, H, W);
  }
  Tensor y = make_op_output({Cout, H, W}, std::move(out), "conv3x3");
  record_op("conv3x3", {x, w, bias}, y, [x, w, Cin, Cout, H, W, hw](auto g, auto gin) {
    auto dx = x.data();
    auto dw = w.data();
    for (std::size_t co = 0; co < Cout; ++co) {
      const double* gplane = g.data() + co * hw;
      for (std::size_t ci = 0; ci < Cin; ++ci) {
        if (auto* gx = gin[0])
          conv_plane_input_grad(gx->data() + ci * hw, gplane, dw.data() + (co * Cin + ci) * 9, H, W);
        if (auto* gw = gin[1])
          conv_plane_kernel_grad(gw->data() + (co * Cin + ci) * 9, gplane, dx.data() + ci * hw, H, W);
      }
      if (auto* gb = gin[2]) {
        double acc = 0.0;
        for (std::size_t i = 0; i < hw; ++i) acc += gplane[i];
        (*gb)[co] += acc;
      }
    }
  });
  return y;
}

}  // namespace vmr
