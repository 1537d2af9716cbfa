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
#include <ope/random.hpp>
#include <ope/selection.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace ope {

std::string method_name(Method method) {
  switch (method) {
    case Method::kEslb:
      return "ESLB";
    case Method::kLambdaIs:
      return "lambda-IS";
    case Method::kLambdaDr:
      return "lambda-DR";
    case Method::kChebWis:
      return "Cheb-WIS";
    case Method::kDrRaw:
      return "DR";
    case Method::kIsRaw:
      return "IS";
    case Method::kWisRaw:
      return "WIS";
  }
  throw std::invalid_argument("method_name: unknown method");
}

Method parse_method(std::string_view name) {
  auto lower = [](std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
  };
  const std::string wanted = lower(name);
  for (const Method method : kAllMethods) {
    if (lower(method_name(method)) == wanted) {
      return method;
    }
  }
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

bool is_bound_method(Method method) noexcept {
  return method == Method::kEslb || method == Method::kLambdaIs || method == Method::kLambdaDr ||
         method == Method::kChebWis;
}

bool needs_reward_model(Method method) noexcept { return method == Method::kLambdaDr || method == Method::kDrRaw; }

double corrected_exponent(Method method, double delta, std::size_t num_candidates) {
  const int n_policies = static_cast<int>(num_candidates);
  if (method == Method::kEslb) {
    return ConfidenceSpec::for_eslb(delta, n_policies).x;
  }
  if (is_bound_method(method)) {
    return ConfidenceSpec::for_three_event(delta, n_policies).x;
  }
  return 0.0;
}

namespace {

BoundReport raw_score(std::string method, double estimate) {
  BoundReport report;
  report.method = std::move(method);
  report.point_estimate = estimate;
  report.lower_bound = estimate;
  return report;
}

}  // namespace

SelectionReport score_policies(
    const LoggedDataset& data,
    std::span<const PolicyTable> candidates,
    Method method,
    const SelectionOptions& options) {
  if (candidates.empty()) {
    throw std::invalid_argument("score_policies: at least one candidate is required");
  }
  if (!(options.delta > 0.0 && options.delta < 1.0)) {
    throw std::invalid_argument("score_policies: delta must lie in (0, 1)");
  }
  if (needs_reward_model(method) && options.reward_model == nullptr) {
    throw std::invalid_argument("score_policies: method " + method_name(method) + " needs a fitted reward model");
  }

  SelectionReport report;
  report.method = method;
  report.x_corrected = corrected_exponent(method, options.delta, candidates.size());
  if (is_bound_method(method)) {
    report.corrected_delta.assign(candidates.size(), options.delta / static_cast<double>(candidates.size()));
  }
  const double lambda = options.lambda > 0.0 ? options.lambda : default_lambda(data.size());

  report.scores.reserve(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const PolicyTable& target = candidates[k];
    BoundReport score;
    switch (method) {
      case Method::kEslb: {
        const MCOptions mc{derive_seed(options.seed, {k}), options.schedule, options.workers};
        score = eslb(target, data.behavior, data.actions, data.rewards,
                     ConfidenceSpec::for_eslb(options.delta, static_cast<int>(candidates.size())), mc);
        break;
      }
      case Method::kLambdaIs:
        score = lambda_is_bound(data, target, lambda, report.x_corrected);
        break;
      case Method::kLambdaDr:
        score = lambda_dr_bound(data, target, *options.reward_model, lambda, report.x_corrected);
        break;
      case Method::kChebWis:
        score = chebyshev_wis_bound(data, target, report.x_corrected);
        break;
      case Method::kDrRaw:
        score = raw_score("DR", dr_point_estimate(data, target, *options.reward_model));
        break;
      case Method::kIsRaw:
        score = raw_score("IS", is_estimate(importance_weights(target, data.behavior, data.actions), data.rewards));
        break;
      case Method::kWisRaw:
        score = raw_score("WIS", wis_estimate(importance_weights(target, data.behavior, data.actions), data.rewards));
        break;
    }
    if (is_bound_method(method)) {
      score.delta = report.corrected_delta[k];
    }
    report.scores.push_back(std::move(score));
  }

  std::vector<double> values;
  values.reserve(report.scores.size());
  for (const auto& score : report.scores) {
    values.push_back(score.lower_bound);
  }
  report.chosen = select(values, is_bound_method(method));
  return report;
}

std::optional<std::size_t> select(std::span<const double> scores, bool bound_method) {
  if (scores.empty()) {
    throw std::invalid_argument("select: no scores");
  }
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (std::isnan(scores[k])) {
      continue;
    }
    if (!best || scores[k] > scores[*best]) {
      best = k;
    }
  }
  if (bound_method && (!best || !(scores[*best] > 0.0))) {
    return std::nullopt;
  }
  // Raw methods with only NaN scores still pick the first candidate.
  return best ? best : std::optional<std::size_t>{0};
}

double evaluate_selection(const PolicyTable& selected_on_test, std::span<const int> oracle_labels) {
  if (oracle_labels.empty()) {
    throw std::invalid_argument("evaluate_selection: empty test set");
  }
  return expected_reward(selected_on_test, oracle_labels);
}

nlohmann::json to_json(const SelectionReport& report) {
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& score : report.scores) {
    scores.push_back(to_json(score));
  }
  nlohmann::json document = {
      {"method", method_name(report.method)},
      {"bound_method", is_bound_method(report.method)},
      {"x_corrected", number_to_json(report.x_corrected)},
      {"corrected_delta", report.corrected_delta},
      {"scores", std::move(scores)},
      {"abstained", report.abstained()},
      {"chosen_index", report.chosen ? nlohmann::json(*report.chosen) : nlohmann::json(nullptr)},
  };
  document["test_value"] = report.test_value ? number_to_json(*report.test_value) : nlohmann::json(nullptr);
  return document;
}

}  // namespace ope
