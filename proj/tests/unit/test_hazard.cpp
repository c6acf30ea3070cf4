#include <gtest/gtest.h>

#include <cmath>

#include "testkit.hpp"
#include "vmr/hazard.hpp"
#include "vmr/ops.hpp"

using namespace vmr;
using namespace vmr::hazard;

namespace {

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

void set(const Tensor& t, std::vector<double> v) {
  Tensor h = t;
  auto d = h.mutable_data();
  ASSERT_EQ(d.size(), v.size());
  std::copy(v.begin(), v.end(), d.begin());
}

RiskOutput from_cumulative(std::vector<double> p) {
  const std::size_t K = p.size();
  return {Tensor::scalar(0.0), Tensor::zeros({K}), Tensor::parameter({K}, std::move(p))};
}

const std::vector<double> kUnitWeights(kYears + 1, 1.0);

TEST(Ahl, InitHasZeroWeightsAndSmallHazardBias) {
  auto p = AhlParams::init(7);
  for (double v : p.w_base.data()) EXPECT_EQ(v, 0.0);
  for (double v : p.w_hazard.data()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(p.b_base[0], 0.0);
  for (double v : p.b_hazard.data()) EXPECT_EQ(v, 0.01);
  EXPECT_EQ(p.input_dim(), 7u);
  EXPECT_EQ(p.years(), kYears);
}

TEST(Ahl, ZeroNetworkGivesZeroRisk) {
  auto p = AhlParams::init(4);
  set(p.b_hazard, std::vector<double>(kYears, 0.0));
  auto out = ahl_forward(Tensor({4}, {1, -2, 3, 4}), p);
  EXPECT_EQ(out.baseline.item(), 0.0);
  for (double v : out.hazards.data()) EXPECT_EQ(v, 0.0);
  for (double v : out.cumulative.data()) EXPECT_EQ(v, 0.0);
}

TEST(Ahl, CumulativeIsBaselinePlusPartialSums) {
  auto p = AhlParams::init(1);
  set(p.w_base, {0.05});
  set(p.w_hazard, {0.1, 0.2, 0.0, 0.0, 0.0});
  set(p.b_hazard, std::vector<double>(kYears, 0.0));
  auto out = ahl_forward(Tensor({1}, {1.0}), p);
  EXPECT_DOUBLE_EQ(out.baseline.item(), 0.05);
  const std::vector<double> expect{0.15, 0.35, 0.35, 0.35, 0.35};
  for (std::size_t k = 0; k < kYears; ++k) EXPECT_NEAR(out.cumulative[k], expect[k], 1e-15);
}

TEST(Ahl, HazardsAreNonNegative) {
  Rng rng(1);
  auto p = AhlParams::init(3);
  set(p.w_hazard, values(testkit::random_tensor({3, kYears}, rng)));
  for (int i = 0; i < 100; ++i) {
    const auto out = ahl_forward(testkit::random_tensor({3}, rng, -5, 5), p);
    for (double h : out.hazards.data()) EXPECT_GE(h, 0.0);
  }
}

TEST(Ahl, MonotoneOnTenThousandRandomInputs) { EXPECT_EQ(testkit::random_ahl_violations(10000, 2), 0u); }

TEST(Ahl, RaisingAsymmetryWithPositiveWeightNeverLowersRisk) {
  Rng rng(3);
  const std::size_t D = 4;
  auto p = AhlParams::init(D);
  auto wb = values(testkit::random_tensor({D, 1}, rng));
  auto wh = values(testkit::random_tensor({D, kYears}, rng));
  wb[D - 1] = 0.7;  // the r_AA row
  for (std::size_t k = 0; k < kYears; ++k) wh[(D - 1) * kYears + k] = 0.1 + 0.2 * static_cast<double>(k);
  set(p.w_base, wb);
  set(p.w_hazard, wh);
  for (int trial = 0; trial < 200; ++trial) {
    auto hist = testkit::random_tensor({D - 1}, rng);
    auto lo = ahl_forward(risk_input(hist, Tensor::scalar(0.3)), p).cumulative;
    auto hi = ahl_forward(risk_input(hist, Tensor::scalar(1.9)), p).cumulative;
    for (std::size_t k = 0; k < kYears; ++k) EXPECT_GE(hi[k], lo[k]);
  }
}

TEST(Ahl, RejectsWrongInputWidth) {
  auto p = AhlParams::init(3);
  EXPECT_THROW(ahl_forward(Tensor::zeros({4}), p), ShapeError);
  EXPECT_THROW(risk_input(Tensor::zeros({2}), Tensor::zeros({2})), ShapeError);
}

TEST(Targets, EventAtYearOne) {
  Label l{1, 5};
  EXPECT_EQ(year_targets(l), (std::vector<double>{1, 1, 1, 1, 1}));
  EXPECT_EQ(year_mask(l), (std::vector<double>{1, 1, 1, 1, 1}));
}

TEST(Targets, EventAtYearThree) {
  EXPECT_EQ(year_targets(Label{3, 5}), (std::vector<double>{0, 0, 1, 1, 1}));
}

TEST(Targets, CensoredAtFollowupTwo) {
  Label l{std::nullopt, 2};
  EXPECT_EQ(year_targets(l), (std::vector<double>{0, 0, 0, 0, 0}));
  EXPECT_EQ(year_mask(l), (std::vector<double>{1, 1, 0, 0, 0}));
}

TEST(Label, ValidationRejectsInconsistentLabels) {
  EXPECT_THROW((Label{6, 5}.validate()), std::invalid_argument);
  EXPECT_THROW((Label{0, 5}.validate()), std::invalid_argument);
  EXPECT_THROW((Label{4, 3}.validate()), std::invalid_argument);
  EXPECT_THROW((Label{std::nullopt, 0}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((Label{std::nullopt, 3}.validate()));
}

TEST(Loss, SaturatedCorrectPredictionIsNearZero) {
  auto loss = risk_loss(from_cumulative({-30, -30, 30, 30, 30}), Label{3, 5}, kUnitWeights);
  EXPECT_LT(loss.item(), 1e-12);
}

TEST(Loss, MatchesWeightedBceFormula) {
  const std::vector<double> p{-0.4, 0.1, 0.8, 1.2, 2.0};
  const std::vector<double> w{2.0, 1.0, 0.5, 1.0, 1.0, 3.0};
  auto loss = risk_loss(from_cumulative(p), Label{2, 5}, w).item();
  double expect = 0.0;
  for (std::size_t k = 0; k < 5; ++k) {
    const double q = 1.0 / (1.0 + std::exp(-p[k]));
    const double y = k + 1 >= 2 ? 1.0 : 0.0;
    expect -= y * std::log(q) + (1 - y) * std::log(1 - q);
  }
  EXPECT_NEAR(loss, w[1] * expect / 5.0, 1e-14);
}

TEST(Loss, MaskedYearsDoNotAffectValueOrGradient) {
  Rng rng(4);
  const Label l{std::nullopt, 2};
  const std::vector<double> w{1.3, 0.7, 1.1, 0.9, 1.2, 0.6};
  for (int trial = 0; trial < 100; ++trial) {
    auto p = values(testkit::random_tensor({5}, rng, -3, 3));
    auto q = p;
    for (std::size_t k = 2; k < 5; ++k) q[k] += std::uniform_real_distribution<double>(-50, 50)(rng);
    auto a = from_cumulative(p), b = from_cumulative(q);
    Tape ta, tb;
    Tensor la, lb;
    std::vector<double> ga, gb;
    {
      TapeScope s(ta);
      la = risk_loss(a, l, w);
      ga = backward(la, ta).get(a.cumulative);
    }
    {
      TapeScope s(tb);
      lb = risk_loss(b, l, w);
      gb = backward(lb, tb).get(b.cumulative);
    }
    EXPECT_EQ(la.item(), lb.item());
    EXPECT_EQ(ga, gb);
    for (std::size_t k = 2; k < 5; ++k) EXPECT_EQ(ga[k], 0.0);
  }
}

TEST(Loss, RequiresOneWeightPerClass) {
  EXPECT_THROW(risk_loss(from_cumulative({0, 0, 0, 0, 0}), Label{1, 5}, std::vector<double>(5, 1.0)),
               std::invalid_argument);
}

TEST(ClassWeights, InverseFrequencyWithUnitMean) {
  std::vector<Label> labels;
  for (int i = 0; i < 6; ++i) labels.push_back({std::nullopt, 5});
  for (int i = 0; i < 3; ++i) labels.push_back({1, 5});
  labels.push_back({4, 5});
  auto w = class_weights(labels);
  // Raw inverse counts: class0 1/3, class3 1, class5 1/6; mean 1/2.
  EXPECT_NEAR(w[0], (1.0 / 3.0) / 0.5, 1e-15);
  EXPECT_NEAR(w[3], 1.0 / 0.5, 1e-15);
  EXPECT_NEAR(w[5], (1.0 / 6.0) / 0.5, 1e-15);
  for (std::size_t c : {1u, 2u, 4u}) EXPECT_EQ(w[c], 1.0);
  EXPECT_EQ(label_class(Label{1, 5}), 0u);
  EXPECT_EQ(label_class(Label{std::nullopt, 3}), kYears);
}

TEST(PoolHistory, ConstantMapGivesConstantPerChannel) {
  std::vector<double> h(2 * 3 * 3);
  for (std::size_t i = 0; i < 9; ++i) {
    h[i] = 0.25;
    h[9 + i] = -0.5;
  }
  Tensor hidden({2, 3, 3}, h);
  std::vector<vmrnn::VmrnnState> states{{Tensor::zeros({2, 3, 3}), Tensor::zeros({2, 3, 3}), 1},
                                        {hidden, hidden, 2}};
  EXPECT_EQ(values(pool_history(states)), (std::vector<double>{0.25, -0.5}));
}

TEST(PoolHistory, ZeroStateGivesZeroEmbedding) {
  std::vector<vmrnn::VmrnnState> states{vmrnn::VmrnnState::zeros(3, 2, 2)};
  EXPECT_EQ(values(pool_history(states)), std::vector<double>(3, 0.0));
}

TEST(PoolHistory, MatchesExplicitMean) {
  Rng rng(5);
  auto h = testkit::random_tensor({4, 3, 5}, rng);
  std::vector<vmrnn::VmrnnState> states{{h, h, 1}};
  auto pooled = pool_history(states);
  for (std::size_t c = 0; c < 4; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < 15; ++i) acc += h[c * 15 + i];
    EXPECT_EQ(pooled[c], acc / 15.0);
  }
  EXPECT_THROW(pool_history(std::span<const vmrnn::VmrnnState>{}), std::invalid_argument);
}

}  // namespace
