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

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ope {

namespace {

void require_positive_tau(double tau, const char* where) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument(std::string(where) + ": temperature must be positive and finite");
  }
}

/// Row-wise softmax of `logits` in place, stabilized by subtracting the row maximum.
void softmax_rows(Eigen::MatrixXd& logits) {
  const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  logits.colwise() -= row_max;
  logits = logits.array().exp().matrix();
  const Eigen::VectorXd row_sum = logits.rowwise().sum();
  logits.array().colwise() /= row_sum.array();
}

}  // namespace

int gibbs_peak(const GibbsPolicy& policy, int label) {
  if (label < 1 || label > policy.num_actions) {
    throw std::invalid_argument("gibbs_probs: oracle label " + std::to_string(label) + " outside [1, K]");
  }
  const bool faulty = std::find(policy.faulty_set.begin(), policy.faulty_set.end(), label) != policy.faulty_set.end();
  return faulty ? (label % policy.num_actions) + 1 : label;
}

PolicyTable gibbs_probs(const GibbsPolicy& policy, std::span<const int> oracle_labels) {
  require_positive_tau(policy.tau, "gibbs_probs");
  const int k = policy.num_actions;
  if (k < 1) {
    throw std::invalid_argument("gibbs_probs: at least one action is required");
  }
  for (const int f : policy.faulty_set) {
    if (f < 1 || f > k) {
      throw std::invalid_argument("gibbs_probs: faulty action outside [1, K]");
    }
  }
  // Softmax of a one-hot vector scaled by 1/tau, written relative to the peak so a tiny
  // temperature gives off-peak mass exp(-1/tau) instead of overflowing.
  const double off_ratio = std::exp(-1.0 / policy.tau);
  const double normalizer = 1.0 + static_cast<double>(k - 1) * off_ratio;
  const double peak_mass = 1.0 / normalizer;
  const double off_mass = off_ratio / normalizer;

  const auto n = static_cast<Eigen::Index>(oracle_labels.size());
  Eigen::MatrixXd probs = Eigen::MatrixXd::Constant(n, k, off_mass);
  for (Eigen::Index i = 0; i < n; ++i) {
    probs(i, gibbs_peak(policy, oracle_labels[static_cast<std::size_t>(i)]) - 1) = peak_mass;
  }
  return PolicyTable(std::move(probs));
}

PolicyTable softmax_probs(const LinearSoftmaxPolicy& policy, const Eigen::MatrixXd& contexts) {
  require_positive_tau(policy.tau, "softmax_probs");
  if (contexts.cols() != policy.theta.rows()) {
    throw std::invalid_argument("softmax_probs: context dimension does not match theta");
  }
  Eigen::MatrixXd logits = (contexts * policy.theta) / policy.tau;
  if (!logits.allFinite()) {
    throw std::domain_error("softmax_probs: non-finite logits");
  }
  softmax_rows(logits);
  return PolicyTable(std::move(logits));
}

ObjectiveValue policy_objective(
    const LoggedDataset& data, const Eigen::MatrixXd& theta, double tau, FitObjective objective) {
  require_positive_tau(tau, "policy_objective");
  const auto n = data.size();
  if (n == 0) {
    throw std::invalid_argument("policy_objective: empty dataset");
  }
  if (data.contexts.rows() != n || data.contexts.cols() != theta.rows()) {
    throw std::invalid_argument("policy_objective: contexts do not match theta");
  }
  const int k = data.num_actions();
  if (theta.cols() != k) {
    throw std::invalid_argument("policy_objective: theta must have one column per action");
  }

  Eigen::MatrixXd probs = (data.contexts * theta) / tau;
  softmax_rows(probs);

  // d pi(a|x) / d theta_k = pi(a|x) (1{k = a} - pi(k|x)) x / tau, so every gradient is
  // X^T M / tau with M_i = g_i (e_{A_i} - pi_i) for a per-row scalar g_i.
  Eigen::VectorXd target_prob(n);
  Eigen::VectorXd weight(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = data.actions[static_cast<std::size_t>(i)];
    target_prob[i] = probs(i, a - 1);
    weight[i] = target_prob[i] / data.behavior.at(i, a);
  }

  ObjectiveValue result;
  Eigen::VectorXd scale(n);
  if (objective == FitObjective::kImportanceSampling) {
    result.value = (weight.array() * data.rewards.array()).sum() / static_cast<double>(n);
    scale = (weight.array() * data.rewards.array()) / static_cast<double>(n);
  } else {
    const double total = weight.sum();
    const double value = (weight.array() * data.rewards.array()).sum() / total;
    result.value = value;
    scale = weight.array() * (data.rewards.array() - value) / total;
  }

  Eigen::MatrixXd m = -probs;
  m.array().colwise() *= scale.array();
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, data.actions[static_cast<std::size_t>(i)] - 1) += scale[i];
  }
  result.gradient = (data.contexts.transpose() * m) / tau;
  return result;
}

LinearSoftmaxPolicy fit_policy(const LoggedDataset& data, const FitConfig& config) {
  require_positive_tau(config.tau, "fit_policy");
  if (!(config.step_size >= 0.0) || config.steps < 1) {
    throw std::invalid_argument("fit_policy: step size must be non-negative and steps at least 1");
  }
  if (data.size() == 0) {
    throw std::invalid_argument("fit_policy: empty dataset");
  }
  LinearSoftmaxPolicy policy{Eigen::MatrixXd::Zero(data.contexts.cols(), data.num_actions()), config.tau};
  for (int step = 0; step < config.steps; ++step) {
    const auto objective = policy_objective(data, policy.theta, config.tau, config.objective);
    policy.theta += config.step_size * objective.gradient;
    if (!policy.theta.allFinite()) {
      std::ostringstream message;
      message << "fit_policy: parameters diverged at step " << step << " (objective " << objective.value << ")";
      throw std::runtime_error(message.str());
    }
  }
  return policy;
}

PolicyTable policy_table(const Policy& policy, const Eigen::MatrixXd& contexts, std::span<const int> oracle_labels) {
  if (const auto* gibbs = std::get_if<GibbsPolicy>(&policy)) {
    return gibbs_probs(*gibbs, oracle_labels);
  }
  return softmax_probs(std::get<LinearSoftmaxPolicy>(policy), contexts);
}

double expected_reward(const PolicyTable& table, std::span<const int> oracle_labels) {
  const auto n = table.rows();
  if (n == 0) {
    throw std::invalid_argument("expected_reward: empty test set");
  }
  if (static_cast<Eigen::Index>(oracle_labels.size()) != n) {
    throw std::invalid_argument("expected_reward: labels do not match the table");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = oracle_labels[static_cast<std::size_t>(i)];
    if (label < 1 || label > table.num_actions()) {
      throw std::invalid_argument("expected_reward: label outside [1, K]");
    }
    total += table.at(i, label);
  }
  return total / static_cast<double>(n);
}

double gibbs_uniform_value(const GibbsPolicy& policy) {
  std::vector<int> labels(static_cast<std::size_t>(policy.num_actions));
  for (int a = 1; a <= policy.num_actions; ++a) {
    labels[static_cast<std::size_t>(a - 1)] = a;
  }
  return expected_reward(gibbs_probs(policy, labels), labels);
}

double true_value(const Policy& policy, const Eigen::MatrixXd& test_contexts, std::span<const int> oracle_labels) {
  if (oracle_labels.empty()) {
    throw std::invalid_argument("true_value: empty test set");
  }
  return expected_reward(policy_table(policy, test_contexts, oracle_labels), oracle_labels);
}

nlohmann::json policy_to_json(const Policy& policy) {
  if (const auto* gibbs = std::get_if<GibbsPolicy>(&policy)) {
    return {{"kind", "gibbs"}, {"tau", gibbs->tau}, {"num_actions", gibbs->num_actions},
            {"faulty_set", gibbs->faulty_set}};
  }
  const auto& softmax = std::get<LinearSoftmaxPolicy>(policy);
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < softmax.theta.rows(); ++r) {
    std::vector<double> row(softmax.theta.row(r).begin(), softmax.theta.row(r).end());
    rows.push_back(row);
  }
  return {{"kind", "softmax"}, {"tau", softmax.tau}, {"theta", rows}};
}

Policy policy_from_json(const nlohmann::json& document) {
  const auto kind = document.at("kind").get<std::string>();
  if (kind == "gibbs") {
    GibbsPolicy policy;
    policy.tau = document.at("tau").get<double>();
    policy.num_actions = document.at("num_actions").get<int>();
    policy.faulty_set = document.value("faulty_set", std::vector<int>{});
    return policy;
  }
  if (kind == "softmax") {
    const auto rows = document.at("theta").get<std::vector<std::vector<double>>>();
    const auto d = static_cast<Eigen::Index>(rows.size());
    const auto k = d == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.front().size());
    LinearSoftmaxPolicy policy{Eigen::MatrixXd(d, k), document.at("tau").get<double>()};
    for (Eigen::Index r = 0; r < d; ++r) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != k) {
        throw std::invalid_argument("policy_from_json: ragged theta");
      }
      for (Eigen::Index c = 0; c < k; ++c) {
        policy.theta(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      }
    }
    return policy;
  }
  throw std::invalid_argument("policy_from_json: unknown policy kind '" + kind + "'");
}

}  // namespace ope
