#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "json.hpp"
#include "vmr/asymmetry.hpp"
#include "vmr/encoder.hpp"
#include "vmr/vmrnn.hpp"

namespace vmr::harness {

struct SyntheticConfig {
  std::size_t n_subjects = 500;
  double positive_fraction = 0.5;
  std::size_t image_size = 64;
  std::size_t timesteps = 5;
  double lesion_base_sigma = 1.6;       // pixels at onset
  double lesion_growth_per_year = 0.6;  // sigma increase per year after onset
  double lesion_contrast = 0.3;
  std::array<double, 3> density_weights{1.0, 1.0, 1.0};  // low, med, high
  std::array<double, 3> density_amplitude{0.05, 0.12, 0.24};
  double benign_probability = 0.35;  // per exam: a transient one-sided blob
  double missing_exam_probability = 0.1;
  double censoring_probability = 0.2;  // negatives with truncated follow-up
  double noise_std = 0.02;
  std::uint64_t seed = 17;

  /// Throws std::invalid_argument on an impossible configuration.
  void validate() const;
};

struct ModelConfig {
  encoder::EncoderConfig encoder;
  encoder::FusionConfig fusion;
  vmrnn::VmrnnConfig vmrnn;
  asym::AsymmetryConfig asym;
  bool use_vmr = true;
  bool use_asym = true;
  bool freeze_encoder = false;

  void validate() const;
};

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  double clip_norm = 1.0;
  double val_fraction = 0.15;
  double test_fraction = 0.15;
  std::uint64_t seed = 17;
  int threads = 0;  // 0: OpenMP default

  void validate() const;
};

struct RunConfig {
  SyntheticConfig data;
  ModelConfig model;
  TrainConfig train;
};

void to_json(nlohmann::json& j, const SyntheticConfig& c);
void from_json(const nlohmann::json& j, SyntheticConfig& c);
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

/// Sections "data", "model" and "train"; missing keys keep their defaults.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace vmr::harness
