#include "vmr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <stdexcept>

#include "vmr/random.hpp"

namespace vmr::metrics {

std::string_view to_string(DensityGroup group) {
  switch (group) {
    case DensityGroup::low: return "low";
    case DensityGroup::med: return "med";
    case DensityGroup::high: return "high";
  }
  return "?";
}

namespace {

void check_year(std::size_t year) {
  if (year < 1 || year > hazard::kYears)
    throw std::invalid_argument("metrics: year must be in 1.." + std::to_string(hazard::kYears));
}

}  // namespace

std::optional<double> c_index(std::span<const EvalRecord> records, std::size_t horizon, RankScore score) {
  check_year(horizon);
  // Counted in half units so the ratio is formed once from exact integers.
  std::uint64_t half_credit = 0, pairs = 0;
  for (const auto& ri : records) {
    if (!ri.label.event_year) continue;
    const int ei = *ri.label.event_year;
    if (ei > static_cast<int>(horizon)) continue;
    const std::size_t k = score == RankScore::event_year ? static_cast<std::size_t>(ei) : horizon;
    for (const auto& rj : records) {
      if (&ri == &rj) continue;
      const int limit = std::min(rj.label.event_year.value_or(rj.label.followup_years), rj.label.followup_years);
      if (ei >= limit) continue;
      ++pairs;
      const double si = ri.risk[k - 1], sj = rj.risk[k - 1];
      half_credit += si > sj ? 2 : (si == sj ? 1 : 0);
    }
  }
  if (pairs == 0) return std::nullopt;
  return static_cast<double>(half_credit) / static_cast<double>(2 * pairs);
}

std::optional<double> rocauc_year(std::span<const EvalRecord> records, std::size_t year) {
  check_year(year);
  const int k = static_cast<int>(year);
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> items;
  for (const auto& r : records) {
    const auto& l = r.label;
    if (l.event_year && *l.event_year <= k)
      items.push_back({r.risk[year - 1], true});
    else if (l.followup_years >= k)
      items.push_back({r.risk[year - 1], false});
  }
  std::size_t n_pos = 0;
  for (const auto& it : items) n_pos += it.positive;
  const std::size_t n_neg = items.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score < b.score; });
  // Twice the midrank sum of positives, in exact integers.
  std::uint64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    std::size_t pos_in_block = 0;
    while (j < items.size() && items[j].score == items[i].score) pos_in_block += items[j++].positive;
    // Ranks i+1 .. j share midrank (i + 1 + j) / 2.
    twice_rank_sum += pos_in_block * (i + 1 + j);
    i = j;
  }
  const std::uint64_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
  return static_cast<double>(twice_u) / static_cast<double>(2 * n_pos * n_neg);
}

void assign_density_groups(std::span<EvalRecord> records) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return records[a].dense_area < records[b].dense_area; });
  const std::size_t n = records.size();
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t g = std::min<std::size_t>(2, 3 * r / n);
    records[order[r]].density = static_cast<DensityGroup>(g);
  }
}

namespace {

std::optional<double> cell_metric(std::span<const EvalRecord> records, bool is_c_index, std::size_t year) {
  return is_c_index ? c_index(records, year) : rocauc_year(records, year);
}

std::optional<double> percentile(std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::nullopt;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<ReportRow> stratified_report(std::span<const EvalRecord> records, const std::string& model_tag,
                                         const BootstrapConfig& bootstrap) {
  static constexpr std::array<const char*, 2> kMetrics{"c_index", "rocauc"};
  static constexpr std::array<const char*, 4> kGroups{"low", "med", "high", "overall"};

  std::array<std::vector<EvalRecord>, 4> subsets;
  for (const auto& r : records) {
    subsets[static_cast<std::size_t>(r.density)].push_back(r);
    subsets[3].push_back(r);
  }

  std::vector<ReportRow> rows;
  for (std::size_t m = 0; m < kMetrics.size(); ++m)
    for (std::size_t year = 1; year <= hazard::kYears; ++year)
      for (std::size_t g = 0; g < kGroups.size(); ++g) {
        ReportRow row;
        row.model_tag = model_tag;
        row.metric = kMetrics[m];
        row.year = year;
        row.density_group = kGroups[g];
        row.n = subsets[g].size();
        rows.push_back(std::move(row));
      }

#pragma omp parallel for schedule(dynamic)
  for (std::size_t cell = 0; cell < rows.size(); ++cell) {
    auto& row = rows[cell];
    const bool is_c = row.metric == std::string("c_index");
    const std::size_t g = cell % kGroups.size();
    const auto& subset = subsets[g];
    row.value = cell_metric(subset, is_c, row.year);
    if (!row.value || bootstrap.samples == 0) continue;

    const std::uint64_t cell_seed = derive_seed(bootstrap.seed, cell);
    std::vector<double> replicates;
    std::vector<EvalRecord> sample(subset.size());
    for (std::size_t b = 0; b < bootstrap.samples; ++b) {
      Rng rng(derive_seed(cell_seed, b));
      std::uniform_int_distribution<std::size_t> pick(0, subset.size() - 1);
      for (auto& s : sample) s = subset[pick(rng)];
      if (auto v = cell_metric(sample, is_c, row.year)) replicates.push_back(*v);
    }
    std::sort(replicates.begin(), replicates.end());
    row.ci_lo = percentile(replicates, 0.025);
    row.ci_hi = percentile(replicates, 0.975);
  }
  return rows;
}

void write_report_csv(std::ostream& out, std::span<const ReportRow> rows) {
  const auto cell = [&](const std::optional<double>& v) {
    if (v) out << std::setprecision(17) << *v;
  };
  out << "model_tag,metric,year,density_group,value,ci_lo,ci_hi,n\n";
  for (const auto& r : rows) {
    out << r.model_tag << ',' << r.metric << ',' << r.year << ',' << r.density_group << ',';
    cell(r.value);
    out << ',';
    cell(r.ci_lo);
    out << ',';
    cell(r.ci_hi);
    out << ',' << r.n << '\n';
  }
}

}  // namespace vmr::metrics
