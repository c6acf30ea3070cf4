#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "testkit.hpp"
#include "vmr/metrics.hpp"

using namespace vmr;
using namespace vmr::metrics;

namespace {

EvalRecord rec(double score, std::optional<int> event, int followup = 5) {
  EvalRecord r;
  r.risk.fill(score);
  r.label = {event, followup};
  return r;
}

TEST(CIndex, PerfectRanking) {
  const std::vector<EvalRecord> r{rec(0.9, 1), rec(0.5, 2), rec(0.1, 3)};
  EXPECT_EQ(c_index(r), 1.0);
}

TEST(CIndex, AllTiedIsHalf) {
  const std::vector<EvalRecord> r{rec(0.4, 1), rec(0.4, 2), rec(0.4, 3), rec(0.4, std::nullopt)};
  EXPECT_EQ(c_index(r), 0.5);
}

TEST(CIndex, ReversedRankingIsZero) {
  const std::vector<EvalRecord> r{rec(0.1, 1), rec(0.5, 2), rec(0.9, 3)};
  EXPECT_EQ(c_index(r), 0.0);
}

TEST(CIndex, NoComparablePairsIsUndefined) {
  EXPECT_FALSE(c_index(std::vector<EvalRecord>{rec(0.3, std::nullopt), rec(0.6, std::nullopt)}));
  EXPECT_FALSE(c_index(std::vector<EvalRecord>{rec(0.3, 3), rec(0.6, std::nullopt, 3)}));
  EXPECT_FALSE(c_index(std::vector<EvalRecord>{rec(0.3, 4), rec(0.6, std::nullopt)}, 3));
}

TEST(CIndex, CensoredBeforeEventIsNotComparable) {
  // j censored at year 2 cannot be compared to i's event at year 2.
  const std::vector<EvalRecord> r{rec(0.1, 2), rec(0.9, std::nullopt, 2), rec(0.0, std::nullopt, 3)};
  EXPECT_EQ(c_index(r), 1.0);
}

TEST(CIndex, MatchesBruteForceOnRandomInstances) {
  Rng rng(1);
  std::uniform_int_distribution<std::size_t> size(0, 20), horizon(1, 5);
  std::size_t defined = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto r = testkit::random_records(size(rng), rng);
    const std::size_t h = horizon(rng);
    const auto got = c_index(r, h), want = testkit::brute_c_index(r, h);
    ASSERT_EQ(got.has_value(), want.has_value()) << "trial " << trial;
    if (got) {
      ++defined;
      EXPECT_EQ(*got, *want) << "trial " << trial;
    }
  }
  EXPECT_GT(defined, 500u);
}

TEST(CIndex, InvariantUnderIncreasingTransform) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    auto r = testkit::random_records(15, rng);
    auto t = r;
    for (auto& x : t)
      for (auto& s : x.risk) s = std::exp(3.0 * s) - 7.0;
    EXPECT_EQ(c_index(r), c_index(t));
    for (std::size_t k = 1; k <= 5; ++k) EXPECT_EQ(rocauc_year(r, k), rocauc_year(t, k));
  }
}

TEST(CIndex, NegatedScoresGiveComplementWithoutTies) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto r = testkit::random_records(12, rng);
    for (auto& x : r)
      for (auto& s : x.risk) s = u(rng);
    auto neg = r;
    for (auto& x : neg)
      for (auto& s : x.risk) s = -s;
    const auto a = c_index(r), b = c_index(neg);
    ASSERT_EQ(a.has_value(), b.has_value());
    if (a) {
      EXPECT_NEAR(*a + *b, 1.0, 1e-15);
    }
  }
}

TEST(CIndex, TerminalModeRanksOnHorizonScore) {
  auto a = rec(0.0, 1), b = rec(0.0, std::nullopt);
  a.risk = {0.1, 0.2, 0.3, 0.4, 0.9};
  b.risk = {0.5, 0.5, 0.5, 0.5, 0.5};
  const std::vector<EvalRecord> r{a, b};
  EXPECT_EQ(c_index(r, 5, RankScore::event_year), 0.0);
  EXPECT_EQ(c_index(r, 5, RankScore::terminal), 1.0);
  EXPECT_EQ(c_index(r, 3, RankScore::terminal), 0.0);
}

TEST(CIndex, RejectsHorizonOutOfRange) {
  EXPECT_THROW(c_index(std::vector<EvalRecord>{}, 0), std::invalid_argument);
  EXPECT_THROW(c_index(std::vector<EvalRecord>{}, 6), std::invalid_argument);
}

TEST(Auc, SeparatedAndTied) {
  EXPECT_EQ(rocauc_year(std::vector<EvalRecord>{rec(0.8, 1), rec(0.2, std::nullopt)}, 1), 1.0);
  EXPECT_EQ(rocauc_year(std::vector<EvalRecord>{rec(0.5, 1), rec(0.5, std::nullopt)}, 1), 0.5);
  EXPECT_EQ(rocauc_year(std::vector<EvalRecord>{rec(0.2, 1), rec(0.8, std::nullopt)}, 1), 0.0);
}

TEST(Auc, UndefinedWithoutBothClasses) {
  EXPECT_FALSE(rocauc_year(std::vector<EvalRecord>{rec(0.8, 1), rec(0.2, 1)}, 1));
  EXPECT_FALSE(rocauc_year(std::vector<EvalRecord>{rec(0.8, std::nullopt), rec(0.2, 3)}, 2));
  EXPECT_FALSE(rocauc_year(std::vector<EvalRecord>{}, 3));
}

TEST(Auc, EventAfterYearIsNegative) {
  const std::vector<EvalRecord> r{rec(0.9, 1), rec(0.1, 4)};
  EXPECT_EQ(rocauc_year(r, 2), 1.0);
  EXPECT_FALSE(rocauc_year(r, 4));
}

TEST(Auc, MatchesBruteForceOnRandomInstances) {
  Rng rng(4);
  std::uniform_int_distribution<std::size_t> size(0, 20), year(1, 5);
  for (int trial = 0; trial < 1000; ++trial) {
    auto r = testkit::random_records(size(rng), rng);
    const std::size_t k = year(rng);
    const auto got = rocauc_year(r, k), want = testkit::brute_auc(r, k);
    ASSERT_EQ(got.has_value(), want.has_value()) << "trial " << trial;
    if (got) {
      EXPECT_EQ(*got, *want) << "trial " << trial;
    }
  }
}

TEST(Auc, CensoredBeforeYearIsExcluded) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto r = testkit::random_records(15, rng);
    const std::size_t k = 3;
    std::vector<EvalRecord> kept;
    for (const auto& x : r)
      if (x.label.event_year || x.label.followup_years >= static_cast<int>(k)) kept.push_back(x);
    EXPECT_EQ(rocauc_year(r, k), rocauc_year(kept, k));
  }
}

TEST(Density, GroupsPartitionByRank) {
  Rng rng(6);
  for (std::size_t n : {1u, 2u, 3u, 7u, 30u, 31u}) {
    auto r = testkit::random_records(n, rng);
    assign_density_groups(r);
    std::array<std::size_t, 3> count{};
    for (const auto& x : r) ++count[static_cast<std::size_t>(x.density)];
    EXPECT_EQ(count[0] + count[1] + count[2], n);
    for (const auto& a : r)
      for (const auto& b : r)
        if (a.density < b.density) {
          EXPECT_LE(a.dense_area, b.dense_area);
        }
    if (n % 3 == 0) {
      EXPECT_EQ(count, (std::array<std::size_t, 3>{n / 3, n / 3, n / 3}));
    }
  }
  EXPECT_EQ(to_string(DensityGroup::med), "med");
}

TEST(Report, HasFortyRowsCoveringEveryCell) {
  Rng rng(7);
  auto r = testkit::random_records(60, rng);
  assign_density_groups(r);
  auto rows = stratified_report(r, "m", {50, 1});
  ASSERT_EQ(rows.size(), 40u);
  std::set<std::tuple<std::string, std::size_t, std::string>> cells;
  for (const auto& row : rows) {
    cells.insert({row.metric, row.year, row.density_group});
    if (row.density_group == "overall") {
      EXPECT_EQ(row.n, 60u);
    }
    if (row.value && row.ci_lo) {
      EXPECT_LE(*row.ci_lo, *row.ci_hi);
    }
  }
  EXPECT_EQ(cells.size(), 40u);
}

TEST(Report, SingleGroupMatchesUnstratified) {
  Rng rng(8);
  auto r = testkit::random_records(40, rng);
  for (auto& x : r) x.density = DensityGroup::med;
  for (const auto& row : stratified_report(r, "m", {0, 0})) {
    if (row.density_group != "med" && row.density_group != "overall") {
      EXPECT_EQ(row.n, 0u);
      EXPECT_FALSE(row.value);
      continue;
    }
    const auto want = row.metric == "c_index" ? c_index(r, row.year) : rocauc_year(r, row.year);
    EXPECT_EQ(row.value, want);
    EXPECT_FALSE(row.ci_lo);
  }
}

TEST(Report, GroupWithoutPositivesHasEmptyCells) {
  std::vector<EvalRecord> r{rec(0.9, 1), rec(0.1, std::nullopt), rec(0.3, std::nullopt), rec(0.2, std::nullopt)};
  r[0].density = r[1].density = DensityGroup::high;
  r[2].density = r[3].density = DensityGroup::low;
  for (const auto& row : stratified_report(r, "m", {20, 3}))
    if (row.density_group == "low") {
      EXPECT_FALSE(row.value) << row.metric << " " << row.year;
    }
}

TEST(Report, BootstrapIsDeterministicPerSeed) {
  Rng rng(9);
  auto r = testkit::random_records(50, rng);
  assign_density_groups(r);
  std::ostringstream a, b, c;
  write_report_csv(a, stratified_report(r, "x", {100, 42}));
  write_report_csv(b, stratified_report(r, "x", {100, 42}));
  write_report_csv(c, stratified_report(r, "x", {100, 43}));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
}

TEST(Report, CsvLayout) {
  ReportRow row{"vmra", "rocauc", 2, "high", 0.75, std::nullopt, std::nullopt, 12};
  std::ostringstream out;
  write_report_csv(out, std::vector<ReportRow>{row});
  EXPECT_EQ(out.str(), "model_tag,metric,year,density_group,value,ci_lo,ci_hi,n\nvmra,rocauc,2,high,0.75,,,12\n");
}

}  // namespace
