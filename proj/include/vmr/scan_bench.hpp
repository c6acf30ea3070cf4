#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace vmr::harness {

struct BenchConfig {
  std::vector<std::size_t> lengths{256, 1024, 4096};
  std::vector<std::size_t> channels{16, 64};
  std::vector<std::size_t> chunks{64, 256};
  std::vector<int> threads{1, 2, 4};
  std::size_t state_dim = 16;
  std::size_t repeats = 3;  // the minimum wall time is reported
  std::uint64_t seed = 7;
};

/// Powers of four from 64 up to and including lmax.
BenchConfig default_bench(std::size_t lmax);

struct BenchRow {
  std::size_t length = 0;
  std::size_t channels = 0;
  std::size_t chunk = 0;  // 0 for the sequential reference
  int threads = 1;
  std::string impl;  // "seq" or "par"
  double wall_ms = 0.0;
  double max_abs_diff_vs_seq = 0.0;
};

std::vector<BenchRow> run_scan_bench(const BenchConfig& config);
void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows);

/// Sequential time over the fastest parallel time at (L, C) among rows with
/// at least min_threads threads.
std::optional<double> bench_speedup(std::span<const BenchRow> rows, std::size_t length, std::size_t channels,
                                    int min_threads);

}  // namespace vmr::harness
