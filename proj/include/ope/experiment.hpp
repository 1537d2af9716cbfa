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

#ifndef OPE_EXPERIMENT_HPP
#define OPE_EXPERIMENT_HPP

#include <ope/baselines.hpp>
#include <ope/config.hpp>
#include <ope/data.hpp>
#include <ope/selection.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

/**
 * \file
 * \brief The four CLI commands as library calls.
 *
 * Every trial is rebuilt from (seed, sample size, trial index) alone, so trials can run on any
 * number of threads and the reports stay byte-identical. Each command writes its reports and a
 * `manifest.json` into `config.out`.
 */

namespace ope {

struct RunOptions {
  int jobs = 1;
  std::string seed_source = "config";
};

struct RunOutcome {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> failures;  ///< One entry per cell that could not be produced.
  nlohmann::json document;            ///< The main JSON report.

  [[nodiscard]] bool ok() const noexcept { return failures.empty(); }
};

/// Everything one trial needs: logged data for evaluation, candidate tables on its contexts,
/// and each candidate's value.
///
/// With a reward-model split, the DR-family methods see only the rows not used to fit the model;
/// every other method sees all logged rows.
struct TrialData {
  Eigen::Index n = 0;
  LoggedDataset logged;
  std::vector<PolicyTable> targets;    ///< On the logged contexts.
  std::optional<RewardModel> reward_model;
  std::optional<LoggedDataset> heldout;            ///< Rows not used by the reward model, if split.
  std::vector<PolicyTable> heldout_targets;
  std::vector<std::string> target_names;
  std::vector<double> test_values;     ///< Expected reward on the test sample (empty without one).
  std::vector<double> true_values;     ///< Exact for Gibbs targets on synthetic data, else the test value.

  [[nodiscard]] const LoggedDataset& data_for(Method method) const {
    return needs_reward_model(method) && heldout ? *heldout : logged;
  }
  [[nodiscard]] const std::vector<PolicyTable>& targets_for(Method method) const {
    return needs_reward_model(method) && heldout ? heldout_targets : targets;
  }
};

struct TrialRequest {
  Eigen::Index n = 0;
  int trial = 0;
  bool reward_model = false;
  bool test_sample = false;
};

/// Builds one trial. `csv` must hold the loaded dataset when the config reads a CSV file.
TrialData build_trial(const RunConfig& config, const TrialRequest& request, const ClassificationDataset* csv);

RunOutcome run_generate(const RunConfig& config, const RunOptions& options);
RunOutcome run_evaluate(const RunConfig& config, const RunOptions& options);
RunOutcome run_select(const RunConfig& config, const RunOptions& options);
RunOutcome run_coverage(const RunConfig& config, const RunOptions& options);

/// Defaults when the config leaves delta unset.
inline constexpr double kDefaultEvaluateDelta = 0.05;
inline constexpr double kDefaultSelectDelta = 0.01;

}  // namespace ope

#endif
