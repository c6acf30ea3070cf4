#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vmr/hazard.hpp"

namespace vmr::metrics {

enum class DensityGroup { low, med, high };
std::string_view to_string(DensityGroup group);

struct EvalRecord {
  std::string subject_id;
  std::array<double, hazard::kYears> risk{};  // P_1 .. P_K
  hazard::Label label;
  double dense_area = 0.0;
  DensityGroup density = DensityGroup::low;
};

// Which score ranks a comparable pair (i, j) where i has the earlier event.
enum class RankScore {
  event_year,  // P at subject i's event year
  terminal,    // P at the horizon year
};

/// Harrell's C over pairs with event_i <= horizon and
/// event_i < min(event_j or inf, followup_j); ties in score count 0.5.
/// Returns nullopt when no pair is comparable.
std::optional<double> c_index(std::span<const EvalRecord> records, std::size_t horizon = hazard::kYears,
                              RankScore score = RankScore::event_year);

/// Positives: event_year <= k. Negatives: followup >= k and no event by k.
/// Mann-Whitney statistic on P_k with midranks.
std::optional<double> rocauc_year(std::span<const EvalRecord> records, std::size_t year);

/// Splits at the 1/3 and 2/3 rank positions of dense_area (stable on ties).
void assign_density_groups(std::span<EvalRecord> records);

struct ReportRow {
  std::string model_tag;
  std::string metric;  // "c_index" or "rocauc"
  std::size_t year = 0;
  std::string density_group;  // low, med, high, overall
  std::optional<double> value, ci_lo, ci_hi;
  std::size_t n = 0;
};

struct BootstrapConfig {
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
};

std::vector<ReportRow> stratified_report(std::span<const EvalRecord> records, const std::string& model_tag,
                                         const BootstrapConfig& bootstrap = {});

void write_report_csv(std::ostream& out, std::span<const ReportRow> rows);

}  // namespace vmr::metrics
