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

#include <ope/core.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

namespace {

using ope::PolicyTable;

PolicyTable rows(std::initializer_list<std::initializer_list<double>> values) {
  Eigen::MatrixXd probs(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : values) {
    Eigen::Index j = 0;
    for (const double v : row) {
      probs(i, j++) = v;
    }
    ++i;
  }
  return PolicyTable(probs);
}

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const double v : values) {
    out[i++] = v;
  }
  return out;
}

TEST(PolicyTable, RejectsRowsThatDoNotSumToOne) {
  EXPECT_THROW(rows({{0.5, 0.4}}), std::invalid_argument);
  EXPECT_THROW(rows({{1.2, -0.2}}), std::invalid_argument);
}

TEST(PolicyTable, RenormalizesSmallDrift) {
  const auto table = rows({{0.5 + 5e-7, 0.5}});
  EXPECT_NEAR(table.probs().row(0).sum(), 1.0, 1e-15);
}

TEST(LoggedDataset, ValidatesRewardsAndActions) {
  const auto behavior = rows({{0.5, 0.5}, {0.5, 0.5}});
  EXPECT_NO_THROW(ope::LoggedDataset(Eigen::MatrixXd::Zero(2, 1), {1, 2}, vec({1, 0}), behavior));
  EXPECT_THROW(ope::LoggedDataset(Eigen::MatrixXd::Zero(2, 1), {1, 3}, vec({1, 0}), behavior), std::invalid_argument);
  EXPECT_THROW(ope::LoggedDataset(Eigen::MatrixXd::Zero(2, 1), {1, 2}, vec({0.5, 0}), behavior),
               std::invalid_argument);
}

TEST(ImportanceWeights, IdenticalPoliciesGiveUnitWeights) {
  const auto table = rows({{0.2, 0.3, 0.5}, {0.6, 0.3, 0.1}});
  const std::vector<int> actions = {3, 1};
  EXPECT_EQ(ope::importance_weights(table, table, actions), Eigen::VectorXd::Ones(2));
}

TEST(ImportanceWeights, DirectRatio) {
  const std::vector<int> first = {1};
  const std::vector<int> second = {2};
  EXPECT_DOUBLE_EQ(ope::importance_weights(rows({{0.8, 0.2}}), rows({{0.5, 0.5}}), first)[0], 1.6);
  EXPECT_DOUBLE_EQ(ope::importance_weights(rows({{1.0, 0.0}}), rows({{0.5, 0.5}}), second)[0], 0.0);
}

TEST(ImportanceWeights, ZeroBehaviorMassIsASupportViolation) {
  const std::vector<int> actions = {2};
  EXPECT_THROW(ope::importance_weights(rows({{0.5, 0.5}}), rows({{1.0, 0.0}}), actions), ope::SupportViolation);
}

TEST(ImportanceWeights, ShapeMismatch) {
  const std::vector<int> actions = {1};
  EXPECT_THROW(ope::importance_weights(rows({{0.5, 0.5}}), rows({{0.2, 0.3, 0.5}}), actions), std::invalid_argument);
}

TEST(Estimators, ImportanceSampling) {
  EXPECT_DOUBLE_EQ(ope::is_estimate(vec({1, 1, 1, 1}), vec({1, 0, 1, 0})), 0.5);
  EXPECT_DOUBLE_EQ(ope::is_estimate(vec({2, 0}), vec({1, 1})), 1.0);
  EXPECT_NEAR(ope::is_estimate(vec({1.6, 0.4, 1.6}), vec({1, 1, 0})), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(ope::is_estimate(Eigen::VectorXd(), Eigen::VectorXd()), std::invalid_argument);
}

TEST(Estimators, WeightedImportanceSampling) {
  EXPECT_DOUBLE_EQ(ope::wis_estimate(vec({1, 1, 1, 1}), vec({1, 0, 1, 0})), 0.5);
  EXPECT_DOUBLE_EQ(ope::wis_estimate(vec({1.5, 1.5}), vec({1, 0})), 0.5);
  EXPECT_DOUBLE_EQ(ope::wis_estimate(vec({0, 0}), vec({1, 1})), 0.0);
}

TEST(Estimators, WisIsScaleInvariantAndBounded) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> weight(0.0, 5.0);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd w(20);
    Eigen::VectorXd r(20);
    for (int i = 0; i < 20; ++i) {
      w[i] = weight(rng);
      r[i] = coin(rng) ? 1.0 : 0.0;
    }
    const double base = ope::wis_estimate(w, r);
    EXPECT_GE(base, 0.0);
    EXPECT_LE(base, 1.0);
    EXPECT_NEAR(ope::wis_estimate((3.7 * w).eval(), r), base, 1e-14);
  }
  const auto ones = Eigen::VectorXd::Ones(4).eval();
  EXPECT_DOUBLE_EQ(ope::is_estimate(ones, vec({1, 0, 0, 1})), ope::wis_estimate(ones, vec({1, 0, 0, 1})));
}

TEST(EffectiveSampleSize, Examples) {
  EXPECT_DOUBLE_EQ(ope::effective_sample_size(vec({1, 1, 1, 1})), 4.0);
  EXPECT_DOUBLE_EQ(ope::effective_sample_size(vec({1, 0, 0, 0})), 1.0);
  EXPECT_NEAR(ope::effective_sample_size(vec({2, 1, 1})), 16.0 / 6.0, 1e-14);
  EXPECT_THROW(ope::effective_sample_size(vec({0, 0})), std::invalid_argument);
}

TEST(HoeffdingContextTerm, Examples) {
  EXPECT_NEAR(ope::hoeffding_context_term(2, 2.0), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(ope::hoeffding_context_term(10000, std::log(2.0 / 0.05)), 0.01358, 1e-5);
  EXPECT_DOUBLE_EQ(ope::hoeffding_context_term(7, 0.0), 0.0);
}

TEST(ConfidenceSpec, ExponentsAndFloor) {
  EXPECT_NEAR(ope::ConfidenceSpec::for_eslb(0.05).x, std::log(40.0), 1e-15);
  EXPECT_NEAR(ope::ConfidenceSpec::for_three_event(0.05).x, std::log(60.0), 1e-15);
  EXPECT_DOUBLE_EQ(ope::ConfidenceSpec::for_eslb(0.5).x, 2.0);
  EXPECT_NEAR(ope::ConfidenceSpec::for_eslb(0.01, 3).x, std::log(600.0), 1e-14);
  EXPECT_THROW(ope::ConfidenceSpec::for_eslb(0.0), std::invalid_argument);
  EXPECT_THROW(ope::ConfidenceSpec::for_eslb(1.0), std::invalid_argument);
}

TEST(LoggedDataset, SubsetKeepsRows) {
  const auto behavior = rows({{0.5, 0.5}, {0.2, 0.8}, {0.9, 0.1}});
  Eigen::MatrixXd contexts(3, 1);
  contexts << 1, 2, 3;
  const ope::LoggedDataset data(contexts, {1, 2, 1}, vec({1, 0, 1}), behavior);
  const std::vector<Eigen::Index> pick = {2, 0};
  const auto sub = data.subset(pick);
  ASSERT_EQ(sub.size(), 2);
  EXPECT_EQ(sub.actions, (std::vector<int>{1, 1}));
  EXPECT_DOUBLE_EQ(sub.contexts(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(sub.behavior.at(0, 1), 0.9);
}

}  // namespace
