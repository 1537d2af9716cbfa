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

#include <algorithm>
#include <sstream>

namespace ope {

PolicyTable::PolicyTable(Eigen::MatrixXd probs) : probs_(std::move(probs)) {
  if (probs_.cols() < 1) {
    throw std::invalid_argument("PolicyTable: at least one action is required");
  }
  if (!probs_.allFinite()) {
    throw std::invalid_argument("PolicyTable: non-finite probability");
  }
  if ((probs_.array() < 0.0).any()) {
    throw std::invalid_argument("PolicyTable: negative probability");
  }
  for (Eigen::Index i = 0; i < probs_.rows(); ++i) {
    const double sum = probs_.row(i).sum();
    const double gap = std::abs(sum - 1.0);
    if (gap > kRenormalizeTolerance) {
      std::ostringstream message;
      message << "PolicyTable: row " << i << " sums to " << sum;
      throw std::invalid_argument(message.str());
    }
    if (gap > 0.0) {
      probs_.row(i) /= sum;
    }
  }
}

LoggedDataset::LoggedDataset(
    Eigen::MatrixXd contexts_in,
    std::vector<int> actions_in,
    Eigen::VectorXd rewards_in,
    PolicyTable behavior_in)
    : contexts(std::move(contexts_in)),
      actions(std::move(actions_in)),
      rewards(std::move(rewards_in)),
      behavior(std::move(behavior_in)) {
  validate();
}

void LoggedDataset::validate() const {
  const auto n = size();
  if (rewards.size() != n || behavior.rows() != n) {
    throw std::invalid_argument("LoggedDataset: actions, rewards and behavior table differ in length");
  }
  if (contexts.rows() != n && contexts.size() != 0) {
    throw std::invalid_argument("LoggedDataset: context matrix has the wrong number of rows");
  }
  if (!behavior.has_full_support()) {
    throw SupportViolation("LoggedDataset: behavior policy must put positive mass on every action");
  }
  const int k = num_actions();
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = actions[static_cast<std::size_t>(i)];
    if (a < 1 || a > k) {
      throw std::invalid_argument("LoggedDataset: action " + std::to_string(a) + " outside [1, K]");
    }
    if (rewards[i] != 0.0 && rewards[i] != 1.0) {
      throw std::invalid_argument("LoggedDataset: rewards must be 0 or 1");
    }
  }
}

LoggedDataset LoggedDataset::subset(std::span<const Eigen::Index> indices) const {
  const auto m = static_cast<Eigen::Index>(indices.size());
  Eigen::MatrixXd sub_contexts(contexts.size() == 0 ? 0 : m, contexts.cols());
  std::vector<int> sub_actions(indices.size());
  Eigen::VectorXd sub_rewards(m);
  Eigen::MatrixXd sub_behavior(m, behavior.num_actions());
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto i = indices[static_cast<std::size_t>(j)];
    if (contexts.size() != 0) {
      sub_contexts.row(j) = contexts.row(i);
    }
    sub_actions[static_cast<std::size_t>(j)] = actions[static_cast<std::size_t>(i)];
    sub_rewards[j] = rewards[i];
    sub_behavior.row(j) = behavior.probs().row(i);
  }
  return LoggedDataset(std::move(sub_contexts), std::move(sub_actions), std::move(sub_rewards),
                       PolicyTable(std::move(sub_behavior)));
}

namespace {

ConfidenceSpec make_spec(double delta, int n_policies, double events, double floor) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("ConfidenceSpec: delta must lie in (0, 1)");
  }
  if (n_policies < 1) {
    throw std::invalid_argument("ConfidenceSpec: at least one policy is required");
  }
  const double x = std::log(events * static_cast<double>(n_policies) / delta);
  return ConfidenceSpec{delta, std::max(x, floor), n_policies};
}

}  // namespace

ConfidenceSpec ConfidenceSpec::for_eslb(double delta, int n_policies) {
  return make_spec(delta, n_policies, 2.0, 2.0);
}

ConfidenceSpec ConfidenceSpec::for_three_event(double delta, int n_policies) {
  return make_spec(delta, n_policies, 3.0, 0.0);
}

WeightVector importance_weights(const PolicyTable& target, const PolicyTable& behavior, std::span<const int> actions) {
  if (target.rows() != behavior.rows() || target.num_actions() != behavior.num_actions()) {
    throw std::invalid_argument("importance_weights: target and behavior tables differ in shape");
  }
  if (static_cast<Eigen::Index>(actions.size()) != target.rows()) {
    throw std::invalid_argument("importance_weights: action count does not match the tables");
  }
  WeightVector weights(target.rows());
  for (Eigen::Index i = 0; i < target.rows(); ++i) {
    const int a = actions[static_cast<std::size_t>(i)];
    if (a < 1 || a > target.num_actions()) {
      throw std::invalid_argument("importance_weights: action outside [1, K]");
    }
    const double denominator = behavior.at(i, a);
    if (!(denominator > 0.0)) {
      throw SupportViolation("importance_weights: behavior probability is zero at a logged action (row " +
                             std::to_string(i) + ")");
    }
    weights[i] = target.at(i, a) / denominator;
  }
  return weights;
}

double hoeffding_context_term(Eigen::Index n, double x) {
  if (n < 1) {
    throw std::invalid_argument("hoeffding_context_term: n must be positive");
  }
  if (x < 0.0) {
    throw std::invalid_argument("hoeffding_context_term: x must be non-negative");
  }
  return std::sqrt(x / (2.0 * static_cast<double>(n)));
}

}  // namespace ope
