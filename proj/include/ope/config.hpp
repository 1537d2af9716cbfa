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

#ifndef OPE_CONFIG_HPP
#define OPE_CONFIG_HPP

#include <ope/data.hpp>
#include <ope/eslb.hpp>
#include <ope/selection.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ope {

/// Invalid configuration; `field()` is a dotted path such as "targets[1].tau".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message);

  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct DatasetSpec {
  enum class Kind { kSynthetic, kCsv };

  Kind kind = Kind::kSynthetic;
  GeneratorConfig generator;         ///< n, problem_seed and seed are set per run.
  std::filesystem::path csv_path;
  CsvSchema schema;
  double logged_fraction = 0.5;      ///< CSV rows used as logged data; the rest is the test set.
};

struct BehaviorSpec {
  double tau = 0.2;
  std::vector<int> faulty;
};

enum class TargetKind { kGibbs, kFittedIs, kFittedWis, kSoftmaxFile };

struct TargetSpec {
  std::string name;
  TargetKind kind = TargetKind::kGibbs;
  double tau = 0.2;
  std::vector<int> faulty;        ///< Gibbs targets only.
  int steps = 100000;             ///< Fitted targets only.
  double step_size = 0.01;        ///< Fitted targets only.
  std::filesystem::path file;     ///< Softmax-file targets only.
};

struct RunConfig {
  DatasetSpec dataset;
  BehaviorSpec behavior;
  std::vector<TargetSpec> targets;
  std::vector<Method> methods = {Method::kEslb, Method::kLambdaIs, Method::kLambdaDr, Method::kChebWis};
  std::optional<double> delta;           ///< Unset selects the per-command default.
  std::vector<double> coverage_deltas = {0.01, 0.05, 0.1, 0.5};
  std::vector<Eigen::Index> sizes = {1000};
  Eigen::Index test_size = 10000;
  int trials = 1;
  std::uint64_t seed = 0;
  MCSchedule schedule = FixedSchedule{};
  double eta_split = 0.0;                ///< Fraction of logged rows reserved for the reward model; 0 reuses all.
  int reward_folds = 10;
  std::filesystem::path out = "out";

  /// Throws `ConfigError` on the first invalid field.
  void validate() const;
};

/// Parses the JSON form; TOML documents are converted to it first.
RunConfig config_from_json(const nlohmann::json& document);
nlohmann::json to_json(const RunConfig& config);

/// TOML unless the extension is ".json".
RunConfig load_config(const std::filesystem::path& path);

/// TOML text to the equivalent JSON document.
nlohmann::json toml_to_json(const std::string& text, const std::string& source_name = "config");

/// Command-line overrides; unset fields leave the config untouched.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::vector<Method> methods;
  std::optional<double> delta;
  std::optional<int> trials;
  std::optional<double> eta_split;
  std::optional<std::int64_t> mc_iterations;
  std::optional<double> mc_adaptive_eps;
};

/// Where the effective seed came from: "config", "env" (OPE_SEED) or "flag".
struct SeedResolution {
  std::uint64_t seed = 0;
  std::string source = "config";
};

/// Applies OPE_SEED (given as `env_seed`) and then the flags; the flag wins over the environment.
SeedResolution apply_overrides(RunConfig& config, const ConfigOverrides& overrides, const char* env_seed);

std::string target_kind_name(TargetKind kind);

}  // namespace ope

#endif
