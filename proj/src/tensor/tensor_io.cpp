#include "vmr/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace vmr {

namespace {

constexpr std::array<char, 4> kMagic{'V', 'M', 'R', 'T'};
constexpr std::uint8_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "VMRT I/O assumes a little-endian host");

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T take(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError("VMRT: truncated stream");
  return v;
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor& t, DType dtype) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint8_t>(out, kVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
  const auto& shape = t.shape();
  if (shape.size() > 255) throw FormatError("VMRT: rank exceeds 255");
  put<std::uint8_t>(out, static_cast<std::uint8_t>(shape.size()));
  for (auto d : shape) {
    if (d > 0xFFFFFFFFu) throw FormatError("VMRT: dimension exceeds u32");
    put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  }
  auto data = t.data();
  if (dtype == DType::f64) {
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
  } else {
    std::vector<float> tmp(data.begin(), data.end());
    out.write(reinterpret_cast<const char*>(tmp.data()), static_cast<std::streamsize>(tmp.size() * sizeof(float)));
  }
  if (!out) throw FormatError("VMRT: write failed");
}

std::pair<DType, Shape> read_tensor_header(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw FormatError("VMRT: bad magic");
  if (take<std::uint8_t>(in) != kVersion) throw FormatError("VMRT: unsupported version");
  const auto dt = take<std::uint8_t>(in);
  if (dt > 1) throw FormatError("VMRT: unknown dtype " + std::to_string(dt));
  const auto rank = take<std::uint8_t>(in);
  Shape shape(rank);
  for (auto& d : shape) {
    d = take<std::uint32_t>(in);
    if (d == 0) throw FormatError("VMRT: zero extent");
  }
  return {static_cast<DType>(dt), shape};
}

Tensor read_tensor(std::istream& in) {
  auto [dtype, shape] = read_tensor_header(in);
  const std::size_t n = numel_of(shape);
  std::vector<double> values(n);
  if (dtype == DType::f64) {
    if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(n * sizeof(double))))
      throw FormatError("VMRT: truncated payload");
  } else {
    std::vector<float> tmp(n);
    if (!in.read(reinterpret_cast<char*>(tmp.data()), static_cast<std::streamsize>(n * sizeof(float))))
      throw FormatError("VMRT: truncated payload");
    std::copy(tmp.begin(), tmp.end(), values.begin());
  }
  return Tensor(std::move(shape), std::move(values));
}

void save_tensor(const std::filesystem::path& path, const Tensor& t, DType dtype) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_tensor(out, t, dtype);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_tensor(in);
}

std::string encode_tensor(const Tensor& t, DType dtype) {
  std::ostringstream os(std::ios::binary);
  write_tensor(os, t, dtype);
  return os.str();
}

}  // namespace vmr
