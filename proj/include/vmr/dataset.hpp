#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vmr/config.hpp"
#include "vmr/hazard.hpp"
#include "vmr/tensor.hpp"

namespace vmr::harness {

struct Exam {
  bool present = true;
  double delta_t_years = 0.0;  // since the previous scheduled exam
  double age_years = 0.0;
  std::array<Tensor, 4> views;  // LCC, RCC, LMLO, RMLO; [1 x S x S], empty when absent
};

struct Subject {
  std::string id;
  std::vector<Exam> exams;
  hazard::Label label;
  double dense_area = 0.0;
};

struct Dataset {
  std::size_t image_size = 0;
  std::vector<Subject> subjects;
};

/// Textured bilateral background mirrored between sides, per-view noise, and
/// for positives a growing one-sided blob shared by that side's CC and MLO.
/// A subject with event year e shows the lesion from exam e-1 (0-based) on.
/// Any exam may also carry a transient one-sided benign blob.
/// Pixel values are rounded to single precision.
Dataset gen_synthetic(const SyntheticConfig& config);

// On-disk layout: manifest.csv plus images/<subject>_t<k>_<view>.vmrt (f32).
inline constexpr const char* kManifestName = "manifest.csv";

void write_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);
std::string manifest_csv(const Dataset& data);

}  // namespace vmr::harness
