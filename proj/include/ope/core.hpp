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

#ifndef OPE_CORE_HPP
#define OPE_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

/**
 * \file
 * \brief Logged bandit data, importance weights and the plain/self-normalized estimators.
 *
 * Actions are 1-based everywhere in the public interface: a logged action `a` refers to
 * column `a - 1` of a policy table.
 */

namespace ope {

/// Raised when the behavior policy puts zero mass on a logged action.
class SupportViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Row sums must match 1 within this absolute tolerance.
inline constexpr double kRowSumTolerance = 1e-9;
/// Rows off by at most this much are renormalized on ingestion instead of rejected.
inline constexpr double kRenormalizeTolerance = 1e-6;

using WeightVector = Eigen::VectorXd;

/// Conditional action probabilities of one policy at n contexts (n x K, rows on the simplex).
class PolicyTable {
 public:
  PolicyTable() = default;

  /// Validates the rows; rows within `kRenormalizeTolerance` of 1 are renormalized.
  explicit PolicyTable(Eigen::MatrixXd probs);

  [[nodiscard]] const Eigen::MatrixXd& probs() const noexcept { return probs_; }
  [[nodiscard]] Eigen::Index rows() const noexcept { return probs_.rows(); }
  [[nodiscard]] int num_actions() const noexcept { return static_cast<int>(probs_.cols()); }

  /// Probability of the 1-based `action` at row `i`.
  [[nodiscard]] double at(Eigen::Index i, int action) const { return probs_(i, action - 1); }

  /// True if every entry is strictly positive.
  [[nodiscard]] bool has_full_support() const noexcept { return (probs_.array() > 0.0).all(); }

 private:
  Eigen::MatrixXd probs_;
};

/// Contexts, logged actions, binary rewards and the behavior table at the logged contexts.
struct LoggedDataset {
  Eigen::MatrixXd contexts;
  std::vector<int> actions;
  Eigen::VectorXd rewards;
  PolicyTable behavior;

  LoggedDataset() = default;
  LoggedDataset(Eigen::MatrixXd contexts, std::vector<int> actions, Eigen::VectorXd rewards, PolicyTable behavior);

  [[nodiscard]] Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(actions.size()); }
  [[nodiscard]] int num_actions() const noexcept { return behavior.num_actions(); }

  /// Throws `std::invalid_argument` or `SupportViolation` when an invariant fails.
  void validate() const;

  /// Rows `indices` of this dataset, in order.
  [[nodiscard]] LoggedDataset subset(std::span<const Eigen::Index> indices) const;
};

/// Maps an error probability to the exponent x of a bound with `events` failure events and
/// a union over `n_policies` candidates: x = ln(events * n_policies / delta).
struct ConfidenceSpec {
  double delta = 0.05;
  double x = 0.0;
  int n_policies = 1;

  /// Two failure events; x is raised to 2 when ln(2N/delta) < 2, which only strengthens the guarantee.
  static ConfidenceSpec for_eslb(double delta, int n_policies = 1);
  /// Three failure events (lambda-IS, lambda-DR, Chebyshev-WIS).
  static ConfidenceSpec for_three_event(double delta, int n_policies = 1);
};

/// W_i = target(A_i | X_i) / behavior(A_i | X_i).
WeightVector importance_weights(const PolicyTable& target, const PolicyTable& behavior, std::span<const int> actions);

/// (1/n) sum_i w_i r_i.
template <typename WeightsDerived, typename RewardsDerived>
double is_estimate(const Eigen::DenseBase<WeightsDerived>& weights, const Eigen::DenseBase<RewardsDerived>& rewards) {
  if (weights.size() == 0) {
    throw std::invalid_argument("is_estimate: empty input");
  }
  if (weights.size() != rewards.size()) {
    throw std::invalid_argument("is_estimate: weights and rewards differ in length");
  }
  return (weights.derived().array() * rewards.derived().array()).sum() / static_cast<double>(weights.size());
}

/// sum_i w_i r_i / sum_i w_i, and 0 when the weights carry no mass.
template <typename WeightsDerived, typename RewardsDerived>
double wis_estimate(const Eigen::DenseBase<WeightsDerived>& weights, const Eigen::DenseBase<RewardsDerived>& rewards) {
  if (weights.size() == 0) {
    throw std::invalid_argument("wis_estimate: empty input");
  }
  if (weights.size() != rewards.size()) {
    throw std::invalid_argument("wis_estimate: weights and rewards differ in length");
  }
  const double total = weights.sum();
  if (total <= 0.0) {
    return 0.0;
  }
  return (weights.derived().array() * rewards.derived().array()).sum() / total;
}

/// Kish effective sample size (sum_i w~_i^2)^{-1} of the normalized weights.
template <typename WeightsDerived>
double effective_sample_size(const Eigen::DenseBase<WeightsDerived>& weights) {
  const double total = weights.sum();
  if (!(total > 0.0)) {
    throw std::invalid_argument("effective_sample_size: weights have no mass");
  }
  return 1.0 / (weights.derived().array() / total).square().sum();
}

/// Hoeffding deviation of the average per-context value: sqrt(x / (2n)).
double hoeffding_context_term(Eigen::Index n, double x);

}  // namespace ope

#endif
