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

#ifndef OPE_BASELINES_HPP
#define OPE_BASELINES_HPP

#include <ope/core.hpp>
#include <ope/report.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace ope {

/// W^lambda_i = target(A_i|X_i) / (behavior(A_i|X_i) + lambda); bounded by min(W_i, 1/lambda).
struct LambdaWeights {
  double lambda = 0.0;
  Eigen::VectorXd weights;
};

LambdaWeights lambda_weights(
    const PolicyTable& target, const PolicyTable& behavior, std::span<const int> actions, double lambda);

/// 1/sqrt(n).
double default_lambda(Eigen::Index n);

/// Pairwise sample variance (1 / (n (n-1))) sum_{i<j} (z_i - z_j)^2, computed in O(n).
template <typename Derived>
double bernstein_sample_variance(const Eigen::DenseBase<Derived>& values) {
  const auto n = values.size();
  if (n < 2) {
    throw std::invalid_argument("bernstein_sample_variance: at least two values are required");
  }
  const double mean = values.sum() / static_cast<double>(n);
  return (values.derived().array() - mean).square().sum() / static_cast<double>(n - 1);
}

/// Per-action ridge regression eta(x, a) on [x, 1], clipped to [0, 1]. Actions that were never
/// logged predict 0.
struct RewardModel {
  Eigen::MatrixXd coefficients;  ///< (d + 1) x K; last row is the intercept.
  std::vector<double> alphas;    ///< Ridge strength chosen per action (0 for unlogged actions).
  std::vector<bool> fitted;

  [[nodiscard]] int num_actions() const noexcept { return static_cast<int>(coefficients.cols()); }

  /// n x K predictions in [0, 1].
  [[nodiscard]] Eigen::MatrixXd predict(const Eigen::MatrixXd& contexts) const;

  /// All-zero model (eta = 0).
  static RewardModel zero(Eigen::Index dimension, int num_actions);
};

/// The ridge grid searched by cross-validation.
inline const std::vector<double> kRidgeGrid = {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0};

/// Fits one ridge regressor per action with alpha picked by `folds`-fold cross-validation on squared
/// error (leave-one-out when the action has at most 100 samples). Fold assignment is seeded.
RewardModel fit_reward_model(const LoggedDataset& train, int folds = 10, std::uint64_t seed = 0);

/// Unclipped DR estimate V_eta(pi) + (1/n) sum_i W_i (R_i - eta(X_i, A_i)).
double dr_point_estimate(const LoggedDataset& data, const PolicyTable& target, const RewardModel& eta);

/// Empirical-Bernstein bound for the lambda-corrected IS estimator.
BoundReport lambda_is_bound(const LoggedDataset& data, const PolicyTable& target, double lambda, double x);

/// Empirical-Bernstein bound for the lambda-corrected DR estimator with a fixed reward model.
BoundReport lambda_dr_bound(
    const LoggedDataset& data, const PolicyTable& target, const RewardModel& eta, double lambda, double x);

/// Exact sum_k E[W_k^2 | X_k] = sum_k sum_a target(a|X_k)^2 / behavior(a|X_k).
double weight_second_moment(const PolicyTable& target, const PolicyTable& behavior);

/// Chebyshev bound for WIS. When N_x = n - sqrt(2 x sum E[W^2]) <= 0 the bound is vacuous and
/// lower_bound is -infinity.
BoundReport chebyshev_wis_bound(const LoggedDataset& data, const PolicyTable& target, double x);

}  // namespace ope

#endif
