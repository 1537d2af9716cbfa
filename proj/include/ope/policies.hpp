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

#ifndef OPE_POLICIES_HPP
#define OPE_POLICIES_HPP

#include <ope/core.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace ope {

/// Oracle-based Gibbs policy: softmax of (1/tau) * indicator of the peak action.
/// The peak is the oracle label, shifted cyclically by one when the label is in `faulty_set`.
struct GibbsPolicy {
  int num_actions = 2;
  double tau = 1.0;
  std::vector<int> faulty_set;  ///< 1-based; empty means the ideal policy.
};

/// pi(k | x) proportional to exp(x^T theta_k / tau); theta is d x K.
struct LinearSoftmaxPolicy {
  Eigen::MatrixXd theta;
  double tau = 1.0;
};

using Policy = std::variant<GibbsPolicy, LinearSoftmaxPolicy>;

enum class FitObjective { kImportanceSampling, kWeightedImportanceSampling };

struct FitConfig {
  FitObjective objective = FitObjective::kImportanceSampling;
  double step_size = 0.01;
  int steps = 100000;
  double tau = 0.1;
  std::uint64_t seed = 0;
};

/// Peak action for a context with oracle label `label`.
int gibbs_peak(const GibbsPolicy& policy, int label);

PolicyTable gibbs_probs(const GibbsPolicy& policy, std::span<const int> oracle_labels);

PolicyTable softmax_probs(const LinearSoftmaxPolicy& policy, const Eigen::MatrixXd& contexts);

/// Value of the IS or WIS objective at `theta` and its gradient with respect to theta.
struct ObjectiveValue {
  double value = 0.0;
  Eigen::MatrixXd gradient;
};

ObjectiveValue policy_objective(
    const LoggedDataset& data, const Eigen::MatrixXd& theta, double tau, FitObjective objective);

/// Full-batch gradient ascent from theta = 0 on the configured empirical objective.
LinearSoftmaxPolicy fit_policy(const LoggedDataset& data, const FitConfig& config);

/// Table of any policy at the given contexts; Gibbs policies read only the labels.
PolicyTable policy_table(const Policy& policy, const Eigen::MatrixXd& contexts, std::span<const int> oracle_labels);

/// Mean over rows of table(i, label_i): the expected one-hot reward.
double expected_reward(const PolicyTable& table, std::span<const int> oracle_labels);

/// Exact value of a Gibbs policy when oracle labels are uniform over the actions.
double gibbs_uniform_value(const GibbsPolicy& policy);

/// Value of a policy on a test sample with one-hot rewards at the oracle labels.
double true_value(const Policy& policy, const Eigen::MatrixXd& test_contexts, std::span<const int> oracle_labels);

nlohmann::json policy_to_json(const Policy& policy);
Policy policy_from_json(const nlohmann::json& document);

}  // namespace ope

#endif
