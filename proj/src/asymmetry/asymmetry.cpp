#include "vmr/asymmetry.hpp"

#include <cmath>
#include <stdexcept>

#include "vmr/ops.hpp"

namespace vmr::asym {

std::string_view to_string(ViewPair pair) { return pair == ViewPair::cc ? "CC" : "MLO"; }

SadResult sad_compute(const Tensor& left, const Tensor& right, std::size_t t, ViewPair pair) {
  if (left.rank() != 3 || left.shape() != right.shape())
    throw ShapeError("sad_compute: left " + shape_str(left.shape()) + " and right " + shape_str(right.shape()) +
                     " must be matching C x H x W maps");
  const std::size_t W = left.dim(2);
  Tensor diff = sub(left, flip_width(right));
  Tensor norm = channel_norm(diff);

  auto values = norm.data();
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;

  SadResult out;
  out.d_norm = norm;
  out.d_max = gather(norm, {best}, {1});
  out.record = AsymmetryRecord{t, values[best], best / W, best % W, pair};
  return out;
}

bool is_persistent(std::span<const AsymmetryRecord> records, std::size_t window_side) {
  const double threshold = 0.4 * static_cast<double>(window_side);
  for (std::size_t i = 1; i < records.size(); ++i) {
    const double dh = static_cast<double>(records[i].p_h) - static_cast<double>(records[i - 1].p_h);
    const double dw = static_cast<double>(records[i].p_w) - static_cast<double>(records[i - 1].p_w);
    if (!(std::sqrt(dh * dh + dw * dw) < threshold)) return false;
  }
  return true;
}

double fuse_asymmetry(std::span<const AsymmetryRecord> records, bool persistent, double alpha) {
  if (records.empty()) throw std::invalid_argument("fuse_asymmetry: no records");
  double acc = 0.0;
  for (const auto& r : records) acc += r.d_max;
  const double base = acc / static_cast<double>(records.size());
  return persistent && records.size() >= 2 ? base * (1.0 + alpha) : base;
}

Tensor fuse_asymmetry(std::span<const Tensor> d_max, bool persistent, double alpha) {
  if (d_max.empty()) throw std::invalid_argument("fuse_asymmetry: no records");
  Tensor base = scale(sum(concat(d_max)), 1.0 / static_cast<double>(d_max.size()));
  return persistent && d_max.size() >= 2 ? scale(base, 1.0 + alpha) : base;
}

LongitudinalAsymmetry lat_track(std::vector<AsymmetryRecord> records, const AsymmetryConfig& config) {
  if (records.empty()) throw std::invalid_argument("lat_track: no records");
  if (config.window_side == 0) throw std::invalid_argument("lat_track: window side must be positive");
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].t <= records[i - 1].t) throw std::invalid_argument("lat_track: records must be sorted by t");
  LongitudinalAsymmetry out;
  out.persistent = is_persistent(records, config.window_side);
  out.r_aa = fuse_asymmetry(records, out.persistent, config.alpha);
  out.records = std::move(records);
  return out;
}

}  // namespace vmr::asym
