#pragma once

#include <array>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "vmr/checkpoint.hpp"
#include "vmr/dataset.hpp"
#include "vmr/metrics.hpp"
#include "vmr/model.hpp"

namespace vmr::harness {

struct Split {
  std::vector<std::size_t> train, val, test;
};

enum class SplitName { train, val, test, all };
SplitName parse_split(const std::string& name);

/// Subject-level shuffle; each part is returned in ascending index order.
Split split_subjects(std::size_t n, std::uint64_t seed, double val_fraction, double test_fraction);
std::vector<std::size_t> split_indices(const Split& split, SplitName which, std::size_t n);

struct Prediction {
  std::string subject_id;
  std::array<double, hazard::kYears> p{};
  double baseline = 0.0;
  std::array<double, hazard::kYears> hazards{};
  double r_aa = 0.0;
  hazard::Label label;
  double dense_area = 0.0;
};

/// Inference over the selected subjects, in the given order. `cache` holds
/// encoder output indexed like data.subjects.
std::vector<Prediction> predict(const Model& model, const Dataset& data, std::span<const std::size_t> indices,
                                const std::vector<SubjectFeatures>* cache = nullptr);

/// Copies scores and labels; density groups are assigned over the given set.
std::vector<metrics::EvalRecord> to_records(std::span<const Prediction> predictions);

/// Number of adjacent pairs with P_{k+1} < P_k.
std::size_t monotonicity_violations(std::span<const Prediction> predictions);

void write_predictions_csv(std::ostream& out, std::span<const Prediction> predictions);

/// "VMRA", "VMR", "A" or "base" after the module toggles.
std::string model_tag(const ModelConfig& config);

struct Evaluation {
  std::vector<Prediction> predictions;
  std::vector<metrics::ReportRow> report;
};

struct AsymmetryRow {
  std::string subject_id;
  asym::AsymmetryRecord record;
  bool persistent = false;
  double r_aa = 0.0;  // subject-level value, averaged over both view pairs
};

/// Per-exam detector output for each view pair, regardless of use_asym.
std::vector<AsymmetryRow> inspect_asymmetry(const Model& model, const Dataset& data,
                                            std::span<const std::size_t> indices);
void write_asymmetry_csv(std::ostream& out, std::span<const AsymmetryRow> rows);

/// Errors when the dataset cannot have produced the checkpoint's split.
Evaluation evaluate(const Checkpoint& ckpt, const Dataset& data, SplitName split,
                    const metrics::BootstrapConfig& bootstrap);

}  // namespace vmr::harness
