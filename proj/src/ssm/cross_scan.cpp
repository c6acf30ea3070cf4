#include "vmr/ops.hpp"
#include "vmr/ssm.hpp"

namespace vmr::ssm {

std::vector<std::size_t> scan_order(Direction dir, std::size_t height, std::size_t width) {
  const std::size_t hw = height * width;
  std::vector<std::size_t> order(hw);
  for (std::size_t i = 0; i < hw; ++i) {
    const bool reverse = dir == Direction::row_reverse || dir == Direction::col_reverse;
    const std::size_t j = reverse ? hw - 1 - i : i;
    if (dir == Direction::row_forward || dir == Direction::row_reverse) {
      order[i] = j;
    } else {
      const std::size_t h = j % height, w = j / height;
      order[i] = h * width + w;
    }
  }
  return order;
}

std::array<Tensor, 4> cross_scan_expand(const Tensor& x) {
  if (x.rank() != 3) throw ShapeError("cross_scan_expand: x must be C x H x W, got " + shape_str(x.shape()));
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2), hw = H * W;
  std::array<Tensor, 4> out;
  for (auto dir : kDirections) {
    const auto order = scan_order(dir, H, W);
    std::vector<std::size_t> idx(hw * C);
    for (std::size_t i = 0; i < hw; ++i)
      for (std::size_t c = 0; c < C; ++c) idx[i * C + c] = c * hw + order[i];
    out[static_cast<std::size_t>(dir)] = gather(x, std::move(idx), {hw, C});
  }
  return out;
}

Tensor cross_merge(std::span<const Tensor, 4> ys, std::size_t height, std::size_t width) {
  const std::size_t hw = height * width;
  const std::size_t C = ys[0].rank() == 2 ? ys[0].dim(1) : 0;
  for (const auto& y : ys) {
    if (y.rank() != 2 || y.dim(0) != hw || y.dim(1) != C)
      throw ShapeError("cross_merge: every sequence must be " + std::to_string(hw) + " x C, got " +
                       shape_str(y.shape()));
  }
  Tensor merged;
  for (auto dir : kDirections) {
    const auto order = scan_order(dir, height, width);
    // Sequence position i landed on spatial cell order[i].
    std::vector<std::size_t> idx(C * hw);
    for (std::size_t i = 0; i < hw; ++i)
      for (std::size_t c = 0; c < C; ++c) idx[c * hw + order[i]] = i * C + c;
    Tensor spatial = gather(ys[static_cast<std::size_t>(dir)], std::move(idx), {C, height, width});
    merged = merged.defined() ? add(merged, spatial) : spatial;
  }
  return merged;
}

}  // namespace vmr::ssm
