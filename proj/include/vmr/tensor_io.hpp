#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "vmr/tensor.hpp"

// VMRT binary tensor format:
//   "VMRT" | version u8 = 1 | dtype u8 (0 = f32, 1 = f64) | rank u8 |
//   rank x u32 LE dims | row-major LE payload

namespace vmr {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_tensor(std::ostream& out, const Tensor& t, DType dtype = DType::f64);
Tensor read_tensor(std::istream& in);
/// Reads only the header: (dtype, shape).
std::pair<DType, Shape> read_tensor_header(std::istream& in);

void save_tensor(const std::filesystem::path& path, const Tensor& t, DType dtype = DType::f64);
Tensor load_tensor(const std::filesystem::path& path);

std::string encode_tensor(const Tensor& t, DType dtype = DType::f64);

}  // namespace vmr
