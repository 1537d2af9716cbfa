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

#include <ope/baselines.hpp>
#include <ope/random.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace ope {

LambdaWeights lambda_weights(
    const PolicyTable& target, const PolicyTable& behavior, std::span<const int> actions, double lambda) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("lambda_weights: lambda must be positive");
  }
  if (target.rows() != behavior.rows() || target.num_actions() != behavior.num_actions() ||
      static_cast<Eigen::Index>(actions.size()) != target.rows()) {
    throw std::invalid_argument("lambda_weights: inputs differ in shape");
  }
  LambdaWeights out{lambda, Eigen::VectorXd(target.rows())};
  for (Eigen::Index i = 0; i < target.rows(); ++i) {
    const int a = actions[static_cast<std::size_t>(i)];
    out.weights[i] = target.at(i, a) / (behavior.at(i, a) + lambda);
  }
  return out;
}

double default_lambda(Eigen::Index n) {
  if (n < 1) {
    throw std::invalid_argument("default_lambda: n must be positive");
  }
  return 1.0 / std::sqrt(static_cast<double>(n));
}

Eigen::MatrixXd RewardModel::predict(const Eigen::MatrixXd& contexts) const {
  if (contexts.cols() + 1 != coefficients.rows()) {
    throw std::invalid_argument("RewardModel::predict: context dimension mismatch");
  }
  Eigen::MatrixXd out = contexts * coefficients.topRows(contexts.cols());
  out.rowwise() += coefficients.row(coefficients.rows() - 1);
  return out.cwiseMax(0.0).cwiseMin(1.0);
}

RewardModel RewardModel::zero(Eigen::Index dimension, int num_actions) {
  RewardModel model;
  model.coefficients = Eigen::MatrixXd::Zero(dimension + 1, num_actions);
  model.alphas.assign(static_cast<std::size_t>(num_actions), 0.0);
  model.fitted.assign(static_cast<std::size_t>(num_actions), false);
  return model;
}

namespace {

/// Ridge on centered data so the intercept is not penalized. Returns [beta; intercept].
Eigen::VectorXd ridge_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha) {
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd centered = x.rowwise() - x_mean;
  Eigen::MatrixXd gram = centered.transpose() * centered;
  gram.diagonal().array() += alpha;
  const Eigen::VectorXd beta = gram.ldlt().solve(centered.transpose() * (y.array() - y_mean).matrix());
  Eigen::VectorXd out(x.cols() + 1);
  out.head(x.cols()) = beta;
  out[x.cols()] = y_mean - x_mean.dot(beta);
  return out;
}

double clipped_squared_error(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& coef) {
  const Eigen::VectorXd prediction =
      ((x * coef.head(x.cols())).array() + coef[x.cols()]).cwiseMax(0.0).cwiseMin(1.0).matrix();
  return (prediction - y).squaredNorm();
}

template <typename Rows>
Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& source, const Rows& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), source.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = source.row(rows[r]);
  }
  return out;
}

template <typename Rows>
Eigen::VectorXd gather(const Eigen::VectorXd& source, const Rows& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out[static_cast<Eigen::Index>(r)] = source[rows[r]];
  }
  return out;
}

}  // namespace

RewardModel fit_reward_model(const LoggedDataset& train, int folds, std::uint64_t seed) {
  if (folds < 2) {
    throw std::invalid_argument("fit_reward_model: at least two folds are required");
  }
  const int k = train.num_actions();
  const Eigen::Index d = train.contexts.cols();
  if (train.contexts.rows() != train.size()) {
    throw std::invalid_argument("fit_reward_model: contexts are required");
  }
  RewardModel model = RewardModel::zero(d, k);

  for (int action = 1; action <= k; ++action) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < train.size(); ++i) {
      if (train.actions[static_cast<std::size_t>(i)] == action) {
        rows.push_back(i);
      }
    }
    if (rows.empty()) {
      continue;
    }
    const Eigen::MatrixXd x = gather_rows(train.contexts, rows);
    const Eigen::VectorXd y = gather(train.rewards, rows);
    const auto m = static_cast<Eigen::Index>(rows.size());

    double best_alpha = kRidgeGrid.back();
    if (m >= 2) {
      const Eigen::Index fold_count = m <= 100 ? m : std::min<Eigen::Index>(folds, m);
      std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::mt19937_64 engine(derive_seed(seed, {static_cast<std::uint64_t>(action)}));
      std::shuffle(order.begin(), order.end(), engine);

      double best_error = std::numeric_limits<double>::infinity();
      for (const double alpha : kRidgeGrid) {
        double error = 0.0;
        for (Eigen::Index fold = 0; fold < fold_count; ++fold) {
          std::vector<Eigen::Index> fit_rows;
          std::vector<Eigen::Index> held_rows;
          for (Eigen::Index r = 0; r < m; ++r) {
            (r % fold_count == fold ? held_rows : fit_rows).push_back(order[static_cast<std::size_t>(r)]);
          }
          const Eigen::VectorXd coef = ridge_fit(gather_rows(x, fit_rows), gather(y, fit_rows), alpha);
          error += clipped_squared_error(gather_rows(x, held_rows), gather(y, held_rows), coef);
        }
        // Ties keep the larger alpha chosen earlier only when strictly worse; the grid is ascending.
        if (std::isfinite(error) && error < best_error) {
          best_error = error;
          best_alpha = alpha;
        }
      }
    }
    Eigen::VectorXd coef = ridge_fit(x, y, best_alpha);
    if (!coef.allFinite()) {
      best_alpha = kRidgeGrid.back();
      coef = ridge_fit(x, y, best_alpha);
    }
    model.coefficients.col(action - 1) = coef;
    model.alphas[static_cast<std::size_t>(action - 1)] = best_alpha;
    model.fitted[static_cast<std::size_t>(action - 1)] = true;
  }
  return model;
}

namespace {

/// eta at the logged contexts with unfitted actions forced to 0.
Eigen::MatrixXd model_table(const LoggedDataset& data, const RewardModel& eta) {
  if (eta.num_actions() != data.num_actions()) {
    throw std::invalid_argument("reward model and data disagree on the number of actions");
  }
  if (data.contexts.rows() != data.size()) {
    throw std::invalid_argument("reward model needs the logged contexts");
  }
  Eigen::MatrixXd table = eta.predict(data.contexts);
  for (int a = 0; a < eta.num_actions(); ++a) {
    if (!eta.fitted.empty() && !eta.fitted[static_cast<std::size_t>(a)]) {
      table.col(a).setZero();
    }
  }
  return table;
}

void require_bound_inputs(const LoggedDataset& data, const PolicyTable& target, double lambda, double x) {
  if (data.size() < 2) {
    throw std::invalid_argument("bound: at least two samples are required");
  }
  if (target.rows() != data.size() || target.num_actions() != data.num_actions()) {
    throw std::invalid_argument("bound: target table does not match the data");
  }
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("bound: lambda must be positive");
  }
  if (!(x > 0.0)) {
    throw std::invalid_argument("bound: x must be positive");
  }
}

}  // namespace

double dr_point_estimate(const LoggedDataset& data, const PolicyTable& target, const RewardModel& eta) {
  const auto n = data.size();
  if (n == 0) {
    throw std::invalid_argument("dr_point_estimate: empty dataset");
  }
  const Eigen::MatrixXd predictions = model_table(data, eta);
  const WeightVector weights = importance_weights(target, data.behavior, data.actions);
  double direct = 0.0;
  double correction = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = data.actions[static_cast<std::size_t>(i)];
    direct += target.probs().row(i).dot(predictions.row(i));
    correction += weights[i] * (data.rewards[i] - predictions(i, a - 1));
  }
  return (direct + correction) / static_cast<double>(n);
}

BoundReport lambda_is_bound(const LoggedDataset& data, const PolicyTable& target, double lambda, double x) {
  require_bound_inputs(data, target, lambda, x);
  const auto n = data.size();
  const auto nd = static_cast<double>(n);
  const auto corrected = lambda_weights(target, data.behavior, data.actions, lambda);
  const Eigen::VectorXd terms = corrected.weights.cwiseProduct(data.rewards);

  const double variance = bernstein_sample_variance(terms);
  const double variance_term = std::sqrt(2.0 * x * variance / nd);
  const double range_term = 7.0 * x / (3.0 * lambda * (nd - 1.0));
  const Eigen::ArrayXXd shrink = data.behavior.probs().array() / (data.behavior.probs().array() + lambda);
  const double bias = (target.probs().array() * (shrink - 1.0).abs()).sum() / nd;

  BoundReport report;
  report.method = "lambda-IS";
  report.point_estimate = terms.mean();
  report.concentration = variance_term + range_term;
  report.bias = bias;
  report.bias_kind = BiasKind::kAdditive;
  report.context_term = hoeffding_context_term(n, x);
  report.lower_bound = report.point_estimate - report.concentration - report.bias - report.context_term;
  report.x = x;
  report.diagnostics = {{"lambda", lambda}, {"variance", variance}, {"variance_term", variance_term},
                        {"range_term", range_term}};
  return report;
}

BoundReport lambda_dr_bound(
    const LoggedDataset& data, const PolicyTable& target, const RewardModel& eta, double lambda, double x) {
  require_bound_inputs(data, target, lambda, x);
  const auto n = data.size();
  const auto nd = static_cast<double>(n);
  const Eigen::MatrixXd predictions = model_table(data, eta);
  const auto corrected = lambda_weights(target, data.behavior, data.actions, lambda);

  Eigen::VectorXd terms(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = data.actions[static_cast<std::size_t>(i)];
    terms[i] = corrected.weights[i] * (data.rewards[i] - predictions(i, a - 1)) +
               target.probs().row(i).dot(predictions.row(i));
  }

  const double variance = bernstein_sample_variance(terms);
  const double variance_term = std::sqrt(2.0 * x * variance / nd);
  const double range_term = (7.0 / 3.0) * (1.0 + 1.0 / lambda) * x / (nd - 1.0);

  const Eigen::ArrayXXd shrink = data.behavior.probs().array() / (data.behavior.probs().array() + lambda);
  const Eigen::ArrayXXd pi = target.probs().array();
  const double bias_shift = (pi * (shrink - 1.0).abs()).sum() / nd;
  const double bias_model = (pi * predictions.array() * (1.0 - shrink)).sum() / nd;

  BoundReport report;
  report.method = "lambda-DR";
  report.point_estimate = terms.mean();
  report.concentration = variance_term + range_term;
  report.bias = bias_shift + bias_model;
  report.bias_kind = BiasKind::kAdditive;
  report.context_term = hoeffding_context_term(n, x);
  report.lower_bound = report.point_estimate - report.concentration - report.bias - report.context_term;
  report.x = x;
  report.diagnostics = {{"lambda", lambda},          {"variance", variance},     {"variance_term", variance_term},
                        {"range_term", range_term},  {"bias_shift", bias_shift}, {"bias_model", bias_model}};
  return report;
}

double weight_second_moment(const PolicyTable& target, const PolicyTable& behavior) {
  if (target.rows() != behavior.rows() || target.num_actions() != behavior.num_actions()) {
    throw std::invalid_argument("weight_second_moment: tables differ in shape");
  }
  if (!behavior.has_full_support()) {
    throw SupportViolation("weight_second_moment: behavior policy must have full support");
  }
  return (target.probs().array().square() / behavior.probs().array()).sum();
}

BoundReport chebyshev_wis_bound(const LoggedDataset& data, const PolicyTable& target, double x) {
  const auto n = data.size();
  if (n < 1) {
    throw std::invalid_argument("chebyshev_wis_bound: empty dataset");
  }
  if (!(x > 0.0)) {
    throw std::invalid_argument("chebyshev_wis_bound: x must be positive");
  }
  const auto nd = static_cast<double>(n);
  const double second_moment = weight_second_moment(target, data.behavior);
  const double n_x = nd - std::sqrt(2.0 * x * second_moment);
  const WeightVector weights = importance_weights(target, data.behavior, data.actions);

  BoundReport report;
  report.method = "Cheb-WIS";
  report.point_estimate = wis_estimate(weights, data.rewards);
  report.bias = n_x / nd;
  report.bias_kind = BiasKind::kMultiplicative;
  report.context_term = hoeffding_context_term(n, x);
  report.x = x;
  report.diagnostics = {{"N_x", n_x}, {"weight_second_moment", second_moment}};
  if (n_x <= 0.0) {
    report.concentration = std::numeric_limits<double>::infinity();
    report.lower_bound = -std::numeric_limits<double>::infinity();
    return report;
  }
  report.concentration = std::sqrt(second_moment * std::exp(x)) / n_x;
  report.lower_bound = report.bias * (report.point_estimate - report.concentration) - report.context_term;
  return report;
}

}  // namespace ope
