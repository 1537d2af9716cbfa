// Copyright 2026 The ope Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <ope/policies.hpp>
#include <ope/selection.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

TEST(Select, Examples) {
  const std::vector<double> tie = {0.2, 0.5, 0.5};
  EXPECT_EQ(ope::select(tie, true), 1U);
  const std::vector<double> vacuous = {kNegInf, kNegInf};
  EXPECT_FALSE(ope::select(vacuous, true).has_value());
  const std::vector<double> zeros = {0.0, 0.0};
  EXPECT_EQ(ope::select(zeros, false), 0U);
  EXPECT_FALSE(ope::select(zeros, true).has_value());
  const std::vector<double> with_nan = {std::nan(""), 0.1};
  EXPECT_EQ(ope::select(with_nan, true), 1U);
}

TEST(Select, InvariantUnderIncreasingTransforms) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> scores(5);
    for (auto& s : scores) {
      s = unit(rng);
    }
    std::vector<double> moved;
    for (const double s : scores) {
      moved.push_back(std::exp(3.0 * s) - 7.0);
    }
    EXPECT_EQ(ope::select(scores, false), ope::select(moved, false));
  }
}

TEST(Methods, NamesRoundTrip) {
  for (const auto method : ope::kAllMethods) {
    EXPECT_EQ(ope::parse_method(ope::method_name(method)), method);
  }
  EXPECT_EQ(ope::parse_method("eslb"), ope::Method::kEslb);
  EXPECT_EQ(ope::parse_method("cheb-wis"), ope::Method::kChebWis);
  EXPECT_THROW(ope::parse_method("bogus"), std::invalid_argument);
}

TEST(CorrectedExponent, UnionBound) {
  EXPECT_NEAR(ope::corrected_exponent(ope::Method::kEslb, 0.01, 3), std::log(600.0), 1e-14);
  EXPECT_NEAR(ope::corrected_exponent(ope::Method::kEslb, 0.01, 3), 6.397, 1e-3);
  EXPECT_NEAR(ope::corrected_exponent(ope::Method::kLambdaIs, 0.01, 1), std::log(300.0), 1e-14);
  EXPECT_EQ(ope::corrected_exponent(ope::Method::kWisRaw, 0.01, 3), 0.0);
  double previous = 0.0;
  for (std::size_t n = 1; n <= 20; ++n) {
    const double x = ope::corrected_exponent(ope::Method::kChebWis, 0.05, n);
    EXPECT_GT(x, previous);
    previous = x;
  }
}

struct Benchmark {
  ope::LoggedDataset data;
  std::vector<ope::PolicyTable> candidates;
  std::vector<int> labels;
};

/// Two actions; behaviour puts 0.9 on the label. Candidates: the behaviour itself and its mirror.
Benchmark matched_versus_mismatched(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> label(1, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::vector<int> actions(static_cast<std::size_t>(n));
  Eigen::MatrixXd behavior(n, 2);
  Eigen::MatrixXd mirror(n, 2);
  Eigen::VectorXd rewards(n);
  for (int i = 0; i < n; ++i) {
    const int l = label(rng);
    labels[static_cast<std::size_t>(i)] = l;
    behavior.row(i) = l == 1 ? Eigen::RowVector2d(0.9, 0.1) : Eigen::RowVector2d(0.1, 0.9);
    mirror.row(i) = l == 1 ? Eigen::RowVector2d(0.001, 0.999) : Eigen::RowVector2d(0.999, 0.001);
    const int a = unit(rng) < behavior(i, 0) ? 1 : 2;
    actions[static_cast<std::size_t>(i)] = a;
    rewards[i] = a == l ? 1.0 : 0.0;
  }
  ope::PolicyTable table(behavior);
  return {ope::LoggedDataset(Eigen::MatrixXd::Zero(n, 1), actions, rewards, table),
          {table, ope::PolicyTable(mirror)}, labels};
}

TEST(ScorePolicies, EslbPrefersTheMatchedPolicy) {
  const auto bench = matched_versus_mismatched(10000, 3);
  ope::SelectionOptions options;
  options.delta = 0.01;
  options.seed = 5;
  options.schedule = ope::FixedSchedule{20, 5};
  const auto report = ope::score_policies(bench.data, bench.candidates, ope::Method::kEslb, options);
  ASSERT_TRUE(report.chosen.has_value());
  EXPECT_EQ(*report.chosen, 0U);
  EXPECT_NEAR(report.scores[0].point_estimate, 0.9, 0.01);
  EXPECT_GT(report.scores[0].lower_bound, 0.75);
  EXPECT_LT(report.scores[1].lower_bound, 0.05);
  EXPECT_NEAR(report.x_corrected, std::log(400.0), 1e-14);
  EXPECT_EQ(report.corrected_delta, (std::vector<double>{0.005, 0.005}));
}

TEST(ScorePolicies, SingleCandidateUsesTheUncorrectedExponent) {
  const auto bench = matched_versus_mismatched(2000, 4);
  ope::SelectionOptions options;
  options.delta = 0.05;
  const std::vector<ope::PolicyTable> one = {bench.candidates[0]};
  const auto report = ope::score_policies(bench.data, one, ope::Method::kLambdaIs, options);
  EXPECT_NEAR(report.x_corrected, std::log(3.0 / 0.05), 1e-14);
  EXPECT_EQ(report.chosen, 0U);
}

TEST(ScorePolicies, CorrectionNeverRaisesABound) {
  const auto bench = matched_versus_mismatched(3000, 6);
  ope::SelectionOptions options;
  options.delta = 0.05;
  options.seed = 2;
  options.schedule = ope::FixedSchedule{10, 2};
  const auto model = ope::fit_reward_model(bench.data, 10, 0);
  options.reward_model = &model;
  for (const auto method : {ope::Method::kEslb, ope::Method::kLambdaIs, ope::Method::kLambdaDr,
                            ope::Method::kChebWis}) {
    const auto joint = ope::score_policies(bench.data, bench.candidates, method, options);
    for (std::size_t k = 0; k < bench.candidates.size(); ++k) {
      // Each candidate's Monte-Carlo stream depends on its index, so ESLB compares candidate 0 only.
      if (method == ope::Method::kEslb && k > 0) {
        continue;
      }
      const std::vector<ope::PolicyTable> alone = {bench.candidates[k]};
      const auto single = ope::score_policies(bench.data, alone, method, options);
      EXPECT_LE(joint.scores[k].lower_bound, single.scores[0].lower_bound) << ope::method_name(method);
    }
  }
}

TEST(ScorePolicies, RawMethodsNeverAbstainAndNeedAModelForDr) {
  const auto bench = matched_versus_mismatched(500, 7);
  ope::SelectionOptions options;
  const auto is = ope::score_policies(bench.data, bench.candidates, ope::Method::kIsRaw, options);
  EXPECT_TRUE(is.chosen.has_value());
  EXPECT_EQ(is.scores[0].lower_bound, is.scores[0].point_estimate);
  EXPECT_TRUE(is.corrected_delta.empty());
  EXPECT_THROW(ope::score_policies(bench.data, bench.candidates, ope::Method::kDrRaw, options), std::invalid_argument);
  EXPECT_THROW(ope::score_policies(bench.data, {}, ope::Method::kIsRaw, options), std::invalid_argument);
}

TEST(ScorePolicies, ReportIsBitIdenticalAcrossRuns) {
  const auto bench = matched_versus_mismatched(800, 8);
  ope::SelectionOptions options;
  options.seed = 99;
  options.schedule = ope::FixedSchedule{30, 3};
  const auto first = ope::to_json(ope::score_policies(bench.data, bench.candidates, ope::Method::kEslb, options));
  options.workers = 4;
  const auto second = ope::to_json(ope::score_policies(bench.data, bench.candidates, ope::Method::kEslb, options));
  EXPECT_EQ(first.dump(), second.dump());
}

TEST(ScorePolicies, AbstentionSerializesAsNull) {
  const auto bench = matched_versus_mismatched(4, 9);
  ope::SelectionOptions options;
  options.delta = 0.05;
  const auto report = ope::score_policies(bench.data, bench.candidates, ope::Method::kChebWis, options);
  EXPECT_TRUE(report.abstained());
  const auto json = ope::to_json(report);
  EXPECT_TRUE(json.at("chosen_index").is_null());
  EXPECT_TRUE(json.at("abstained").get<bool>());
}

TEST(EvaluateSelection, ClosedForms) {
  std::vector<int> labels = {1, 5, 3, 3, 2, 4};
  const auto ideal = ope::gibbs_probs(ope::GibbsPolicy{5, 0.2, {}}, labels);
  EXPECT_NEAR(ope::evaluate_selection(ideal, labels), std::exp(5.0) / (std::exp(5.0) + 4.0), 1e-14);
  const ope::PolicyTable uniform(Eigen::MatrixXd::Constant(6, 5, 0.2));
  EXPECT_NEAR(ope::evaluate_selection(uniform, labels), 0.2, 1e-15);
}

}  // namespace
