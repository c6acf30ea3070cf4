#pragma once

#include <cstdint>
#include <random>

#include "vmr/tensor.hpp"

namespace vmr {

using Rng = std::mt19937_64;

/// Trainable leaf with entries drawn from U(-bound, bound).
Tensor uniform_parameter(Shape shape, double bound, Rng& rng);
Tensor constant_parameter(Shape shape, double value);
/// Non-trainable tensor with N(0, stddev^2) entries.
Tensor normal_tensor(Shape shape, double stddev, Rng& rng);

/// Derives an independent stream from (seed, stream id).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace vmr
