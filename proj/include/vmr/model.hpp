#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "vmr/asymmetry.hpp"
#include "vmr/config.hpp"
#include "vmr/dataset.hpp"
#include "vmr/encoder.hpp"
#include "vmr/hazard.hpp"
#include "vmr/vmrnn.hpp"

namespace vmr::harness {

struct Model {
  ModelConfig config;
  encoder::EncoderParams encoder;
  encoder::FusionParams fusion;
  vmrnn::BlockParams vmrnn;
  hazard::AhlParams ahl;

  static Model init(const ModelConfig& config, std::uint64_t seed);
  /// Deep copy: fresh leaves holding the same values.
  Model clone() const;
  /// Copies values from a model of identical structure.
  void assign_values(const Model& other);

  /// Stable order, names prefixed by component.
  vmrnn::NamedTensors named_tensors() const;
  /// Leaves updated by the optimizer (the encoder is skipped when frozen).
  std::vector<Tensor> trainable() const;
  std::size_t history_dim() const;
};

/// Encoder output for each present exam (nullopt for missing exams).
using ExamFeatures = std::array<Tensor, 4>;
using SubjectFeatures = std::vector<std::optional<ExamFeatures>>;

SubjectFeatures encode_subject(const Model& model, const Subject& subject);

struct SubjectOutput {
  hazard::RiskOutput risk;
  Tensor r_aa;  // scalar
  std::array<asym::LongitudinalAsymmetry, 2> tracks;  // CC, MLO; empty when use_asym is off
};

/// Full pipeline for one subject. `features` may supply precomputed encoder
/// output; with a frozen encoder the encoder always runs outside the tape.
SubjectOutput forward(const Model& model, const Subject& subject, const SubjectFeatures* features = nullptr);

}  // namespace vmr::harness
