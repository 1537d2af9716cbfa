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

#ifndef OPE_SELECTION_HPP
#define OPE_SELECTION_HPP

#include <ope/baselines.hpp>
#include <ope/core.hpp>
#include <ope/eslb.hpp>
#include <ope/report.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ope {

enum class Method { kEslb, kLambdaIs, kLambdaDr, kChebWis, kDrRaw, kIsRaw, kWisRaw };

/// All methods in reporting order.
inline constexpr Method kAllMethods[] = {Method::kEslb,  Method::kLambdaIs, Method::kLambdaDr, Method::kChebWis,
                                         Method::kDrRaw, Method::kIsRaw,    Method::kWisRaw};

/// "ESLB", "lambda-IS", "lambda-DR", "Cheb-WIS", "DR", "IS", "WIS".
std::string method_name(Method method);

/// Inverse of `method_name`, case-insensitive. Throws `std::invalid_argument` on unknown names.
Method parse_method(std::string_view name);

/// Lower-bound methods may abstain; raw point estimates always select.
bool is_bound_method(Method method) noexcept;

/// Methods that need a reward model.
bool needs_reward_model(Method method) noexcept;

struct SelectionOptions {
  double delta = 0.01;
  std::uint64_t seed = 0;
  MCSchedule schedule = FixedSchedule{};
  int workers = 1;
  double lambda = 0.0;  ///< 0 selects 1/sqrt(n).
  const RewardModel* reward_model = nullptr;
};

struct SelectionReport {
  Method method = Method::kEslb;
  std::vector<BoundReport> scores;  ///< Raw methods carry the estimate in both point_estimate and lower_bound.
  std::optional<std::size_t> chosen;  ///< 0-based; empty when the method abstains.
  double x_corrected = 0.0;
  std::vector<double> corrected_delta;
  std::optional<double> test_value;

  [[nodiscard]] bool abstained() const noexcept { return !chosen.has_value(); }
};

/// Exponent used for every candidate: the single-policy exponent with delta replaced by delta / N.
double corrected_exponent(Method method, double delta, std::size_t num_candidates);

/// Scores every candidate on the same data. Candidate k uses the sub-seed derive_seed(seed, {k}).
SelectionReport score_policies(
    const LoggedDataset& data,
    std::span<const PolicyTable> candidates,
    Method method,
    const SelectionOptions& options);

/// Argmax with ties to the lowest index. Bound methods abstain when the maximum is not positive.
std::optional<std::size_t> select(std::span<const double> scores, bool bound_method);

/// Expected reward of the selected policy on the test contexts, mean_i pi(label_i | x_i).
double evaluate_selection(const PolicyTable& selected_on_test, std::span<const int> oracle_labels);

nlohmann::json to_json(const SelectionReport& report);

}  // namespace ope

#endif
