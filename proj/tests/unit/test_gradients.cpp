#include <gtest/gtest.h>

#include "testkit.hpp"

namespace {

using vmr::testkit::GradCase;

class Gradient : public ::testing::TestWithParam<GradCase> {};

TEST_P(Gradient, MatchesCentralDifferences) {
  const auto report = GetParam().run();
  EXPECT_GT(report.entries, 0u);
  EXPECT_LT(report.max_rel_error, 1e-4) << "worst entry " << report.worst << ": analytic " << report.worst_analytic
                                      << ", numeric " << report.worst_numeric;
}

std::string case_name(const ::testing::TestParamInfo<GradCase>& info) {
  std::string out;
  for (char c : info.param.name) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

INSTANTIATE_TEST_SUITE_P(AllOps, Gradient, ::testing::ValuesIn(vmr::testkit::gradient_cases()), case_name);

}  // namespace
