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

#include <ope/eslb.hpp>
#include <ope/experiment.hpp>
#include <ope/policies.hpp>
#include <ope/random.hpp>
#include <ope/report.hpp>
#include <ope/selection.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

namespace ope {

namespace {

constexpr const char* kVersion = "0.1.0";

/// Seed-derivation purposes; each value names one independent random stream of a trial.
enum Stream : std::uint64_t {
  kProblemStream = 0,
  kSampleStream = 1,
  kTestStream = 2,
  kLoggingStream = 3,
  kFitStream = 4,
  kEtaSplitStream = 5,
  kRewardFoldStream = 6,
  kSelectionStream = 7,
  kCoverageStream = 8,
};

std::uint64_t trial_key(const RunConfig& config, Eigen::Index n, int trial) {
  return derive_seed(config.seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(trial)});
}

/// Calls task(i) for i in [0, count) on up to `jobs` threads. `task` must not throw.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  const auto threads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      task(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        task(i);
      }
    });
  }
}

struct Source {
  ClassificationDataset logged;
  std::optional<ClassificationDataset> test;
  int num_actions = 0;
};

Source make_source(const RunConfig& config, Eigen::Index n, int trial, bool test_sample,
                   const ClassificationDataset* csv) {
  const auto key = trial_key(config, n, trial);
  Source source;
  if (config.dataset.kind == DatasetSpec::Kind::kSynthetic) {
    GeneratorConfig generator = config.dataset.generator;
    generator.n = n;
    generator.problem_seed = derive_seed(config.seed, {kProblemStream});
    generator.seed = derive_seed(key, {kSampleStream});
    source.logged = generate_classification(generator);
    if (test_sample) {
      generator.n = config.test_size;
      generator.seed = derive_seed(key, {kTestStream});
      source.test = generate_classification(generator);
    }
    source.num_actions = generator.num_classes;
    return source;
  }
  if (csv == nullptr) {
    throw std::invalid_argument("build_trial: the CSV dataset was not loaded");
  }
  auto [logged, test] = split(*csv, config.dataset.logged_fraction, derive_seed(key, {kTestStream}));
  source.logged = std::move(logged);
  source.test = std::move(test);
  source.num_actions = csv->num_classes;
  return source;
}

GibbsPolicy behavior_policy(const RunConfig& config, int num_actions) {
  return GibbsPolicy{num_actions, config.behavior.tau, config.behavior.faulty};
}

Policy load_policy_file(const std::filesystem::path& path) {
  std::ifstream input(path);
  if (!input) {
    throw std::runtime_error("cannot open policy file '" + path.string() + "'");
  }
  return policy_from_json(nlohmann::json::parse(input));
}

std::vector<Eigen::Index> all_rows(Eigen::Index n) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    rows[static_cast<std::size_t>(i)] = i;
  }
  return rows;
}

bool needs_test_sample(const RunConfig& config) {
  if (config.dataset.kind == DatasetSpec::Kind::kCsv) {
    return true;
  }
  return std::any_of(config.targets.begin(), config.targets.end(),
                     [](const TargetSpec& target) { return target.kind != TargetKind::kGibbs; });
}

bool needs_any_reward_model(const std::vector<Method>& methods) {
  return std::any_of(methods.begin(), methods.end(), needs_reward_model);
}

std::optional<ClassificationDataset> load_csv_source(const RunConfig& config) {
  if (config.dataset.kind != DatasetSpec::Kind::kCsv) {
    return std::nullopt;
  }
  return load_csv(config.dataset.csv_path, config.dataset.schema);
}

double median(std::vector<double> values) {
  if (values.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  std::sort(values.begin(), values.end());
  const auto mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::string dump(const nlohmann::json& document) { return document.dump(2) + "\n"; }

void write_report(RunOutcome& outcome, const RunConfig& config, const std::string& name, std::string_view content) {
  const auto path = config.out / name;
  write_file_atomic(path, content);
  outcome.files.push_back(path);
}

void write_manifest(RunOutcome& outcome, const RunConfig& config, const RunOptions& options, const std::string& command) {
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& file : outcome.files) {
    outputs.push_back(file.filename().string());
  }
  const nlohmann::json manifest = {
      {"command", command},
      {"version", kVersion},
      {"seed", config.seed},
      {"seed_source", options.seed_source},
      {"config", to_json(config)},
      {"outputs", std::move(outputs)},
      {"failures", outcome.failures},
      {"libraries",
       {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
  };
  write_report(outcome, config, "manifest.json", dump(manifest));
}

std::string mean_std_cell(const std::vector<double>& values, bool abstained) {
  if (abstained) {
    return format_cell(-std::numeric_limits<double>::infinity());
  }
  if (values.empty()) {
    return "n/a";
  }
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double square = 0.0;
  for (const double v : values) {
    square += (v - mean) * (v - mean);
  }
  return format_cell(mean) + " ± " + format_cell(std::sqrt(square / static_cast<double>(values.size())));
}

}  // namespace

TrialData build_trial(const RunConfig& config, const TrialRequest& request, const ClassificationDataset* csv) {
  const auto key = trial_key(config, request.n, request.trial);
  Source source = make_source(config, request.n, request.trial, request.test_sample, csv);
  const int k = source.num_actions;
  const auto behavior = behavior_policy(config, k);
  const LoggedDataset full =
      log_interactions(source.logged, gibbs_probs(behavior, source.logged.labels), derive_seed(key, {kLoggingStream}));

  std::vector<Policy> policies;
  for (std::size_t i = 0; i < config.targets.size(); ++i) {
    const auto& spec = config.targets[i];
    switch (spec.kind) {
      case TargetKind::kGibbs:
        policies.emplace_back(GibbsPolicy{k, spec.tau, spec.faulty});
        break;
      case TargetKind::kFittedIs:
      case TargetKind::kFittedWis: {
        FitConfig fit;
        fit.objective = spec.kind == TargetKind::kFittedIs ? FitObjective::kImportanceSampling
                                                           : FitObjective::kWeightedImportanceSampling;
        fit.step_size = spec.step_size;
        fit.steps = spec.steps;
        fit.tau = spec.tau;
        fit.seed = derive_seed(key, {kFitStream, i});
        policies.emplace_back(fit_policy(full, fit));
        break;
      }
      case TargetKind::kSoftmaxFile:
        policies.push_back(load_policy_file(spec.file));
        break;
    }
  }

  TrialData data;
  data.n = full.size();
  std::vector<Eigen::Index> model_rows = all_rows(full.size());
  std::vector<Eigen::Index> heldout_rows;
  if (config.eta_split > 0.0) {
    auto [reserved, rest] = split_indices(full.size(), config.eta_split, derive_seed(key, {kEtaSplitStream}));
    std::sort(reserved.begin(), reserved.end());
    std::sort(rest.begin(), rest.end());
    model_rows = std::move(reserved);
    heldout_rows = std::move(rest);
  }
  if (request.reward_model) {
    data.reward_model = fit_reward_model(config.eta_split > 0.0 ? full.subset(model_rows) : full,
                                         config.reward_folds, derive_seed(key, {kRewardFoldStream}));
    if (config.eta_split > 0.0) {
      data.heldout = full.subset(heldout_rows);
    }
  }
  std::vector<int> heldout_labels;
  for (const auto row : heldout_rows) {
    heldout_labels.push_back(source.logged.labels[static_cast<std::size_t>(row)]);
  }

  for (std::size_t i = 0; i < policies.size(); ++i) {
    data.target_names.push_back(config.targets[i].name);
    data.targets.push_back(policy_table(policies[i], full.contexts, source.logged.labels));
    if (data.heldout) {
      data.heldout_targets.push_back(policy_table(policies[i], data.heldout->contexts, heldout_labels));
    }
    if (source.test) {
      data.test_values.push_back(
          expected_reward(policy_table(policies[i], source.test->features, source.test->labels), source.test->labels));
    }
    const auto* gibbs = std::get_if<GibbsPolicy>(&policies[i]);
    if (gibbs != nullptr && config.dataset.kind == DatasetSpec::Kind::kSynthetic) {
      data.true_values.push_back(gibbs_uniform_value(*gibbs));
    } else if (source.test) {
      data.true_values.push_back(data.test_values.back());
    } else {
      data.true_values.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  data.logged = full;
  return data;
}

RunOutcome run_generate(const RunConfig& config, const RunOptions& options) {
  RunOutcome outcome;
  const auto csv = load_csv_source(config);
  const Eigen::Index n = config.sizes.front();
  const Source source = make_source(config, n, 0, false, csv ? &*csv : nullptr);
  const auto behavior = behavior_policy(config, source.num_actions);
  const PolicyTable behavior_table = gibbs_probs(behavior, source.logged.labels);
  const LoggedDataset logged =
      log_interactions(source.logged, behavior_table, derive_seed(trial_key(config, n, 0), {kLoggingStream}));

  write_report(outcome, config, "dataset.csv", to_csv(source.logged));

  std::ostringstream log;
  for (Eigen::Index j = 0; j < logged.contexts.cols(); ++j) {
    log << 'x' << j + 1 << ',';
  }
  log << "label,action,reward,propensity\n";
  char buffer[64];
  for (Eigen::Index i = 0; i < logged.size(); ++i) {
    for (Eigen::Index j = 0; j < logged.contexts.cols(); ++j) {
      const auto end = std::to_chars(buffer, buffer + sizeof(buffer), logged.contexts(i, j)).ptr;
      log << std::string_view(buffer, static_cast<std::size_t>(end - buffer)) << ',';
    }
    const int action = logged.actions[static_cast<std::size_t>(i)];
    const auto end = std::to_chars(buffer, buffer + sizeof(buffer), behavior_table.at(i, action)).ptr;
    log << source.logged.labels[static_cast<std::size_t>(i)] << ',' << action << ',' << logged.rewards[i] << ','
        << std::string_view(buffer, static_cast<std::size_t>(end - buffer)) << '\n';
  }
  write_report(outcome, config, "logged.csv", log.str());

  outcome.document = {{"command", "generate"},
                      {"n", logged.size()},
                      {"num_actions", source.num_actions},
                      {"mean_reward", logged.rewards.mean()}};
  write_manifest(outcome, config, options, "generate");
  return outcome;
}

RunOutcome run_evaluate(const RunConfig& config, const RunOptions& options) {
  RunOutcome outcome;
  const auto csv = load_csv_source(config);
  const double delta = config.delta.value_or(kDefaultEvaluateDelta);
  const Eigen::Index n = config.sizes.front();
  const TrialData data = build_trial(
      config, {n, 0, needs_any_reward_model(config.methods), needs_test_sample(config)}, csv ? &*csv : nullptr);

  // Cells are (target, method); each cell scores one policy on its own.
  const std::size_t methods = config.methods.size();
  const std::size_t cells = data.targets.size() * methods;
  std::vector<std::optional<BoundReport>> reports(cells);
  std::vector<std::string> errors(cells);
  const int mc_workers = cells > 1 ? 1 : options.jobs;
  parallel_for(cells, options.jobs, [&](std::size_t cell) {
    const std::size_t target = cell / methods;
    const std::size_t m = cell % methods;
    try {
      SelectionOptions selection;
      selection.delta = delta;
      selection.seed = derive_seed(trial_key(config, n, 0), {kSelectionStream, m, target});
      selection.schedule = config.schedule;
      selection.workers = mc_workers;
      selection.reward_model = data.reward_model ? &*data.reward_model : nullptr;
      const Method method = config.methods[m];
      const auto report =
          score_policies(data.data_for(method), std::span(&data.targets_for(method)[target], 1), method, selection);
      reports[cell] = report.scores.front();
    } catch (const std::exception& error) {
      errors[cell] = error.what();
    }
  });

  nlohmann::json targets = nlohmann::json::array();
  for (std::size_t i = 0; i < data.targets.size(); ++i) {
    const auto weights = importance_weights(data.targets[i], data.logged.behavior, data.logged.actions);
    targets.push_back({{"name", data.target_names[i]},
                       {"true_value", number_to_json(data.true_values[i])},
                       {"n_eff", weights.sum() > 0.0 ? effective_sample_size(weights) : 0.0}});
  }
  nlohmann::json entries = nlohmann::json::array();
  std::vector<std::pair<std::string, BoundReport>> rows;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const auto& name = data.target_names[cell / methods];
    const auto method = method_name(config.methods[cell % methods]);
    if (!reports[cell]) {
      outcome.failures.push_back("target=" + name + " method=" + method + ": " + errors[cell]);
      continue;
    }
    entries.push_back({{"target", name}, {"method", method}, {"report", to_json(*reports[cell])}});
    rows.emplace_back(name, *reports[cell]);
  }
  outcome.document = {{"command", "evaluate"}, {"n", data.logged.size()},   {"delta", delta},
                      {"targets", targets},    {"reports", entries},         {"failures", outcome.failures}};
  const Table table = decomposition_table(rows);
  write_report(outcome, config, "evaluate.json", dump(outcome.document));
  write_report(outcome, config, "decomposition.csv", table.to_csv());
  write_report(outcome, config, "decomposition.md", table.to_markdown());
  write_manifest(outcome, config, options, "evaluate");
  return outcome;
}

RunOutcome run_select(const RunConfig& config, const RunOptions& options) {
  RunOutcome outcome;
  const auto csv = load_csv_source(config);
  const double delta = config.delta.value_or(kDefaultSelectDelta);
  const bool reward_model = needs_any_reward_model(config.methods);
  const std::vector<Eigen::Index> sizes =
      config.dataset.kind == DatasetSpec::Kind::kCsv ? std::vector<Eigen::Index>{0} : config.sizes;

  struct Cell {
    Eigen::Index n = 0;
    int trial = 0;
    std::optional<TrialData> data;
    std::vector<SelectionReport> reports;
    std::string error;
  };
  std::vector<Cell> cells;
  for (const auto n : sizes) {
    for (int t = 0; t < config.trials; ++t) {
      cells.push_back(Cell{n, t, std::nullopt, {}, {}});
    }
  }
  const int mc_workers = cells.size() > 1 ? 1 : options.jobs;
  parallel_for(cells.size(), options.jobs, [&](std::size_t index) {
    Cell& cell = cells[index];
    try {
      TrialData data = build_trial(config, {cell.n, cell.trial, reward_model, true}, csv ? &*csv : nullptr);
      for (std::size_t m = 0; m < config.methods.size(); ++m) {
        SelectionOptions selection;
        selection.delta = delta;
        selection.seed = derive_seed(trial_key(config, cell.n, cell.trial), {kSelectionStream, m});
        selection.schedule = config.schedule;
        selection.workers = mc_workers;
        selection.reward_model = data.reward_model ? &*data.reward_model : nullptr;
        const Method method = config.methods[m];
        auto report = score_policies(data.data_for(method), data.targets_for(method), method, selection);
        if (report.chosen) {
          report.test_value = data.test_values[*report.chosen];
        }
        cell.reports.push_back(std::move(report));
      }
      // Tables are large and no longer needed once scored.
      data.targets.clear();
      data.heldout_targets.clear();
      data.logged = LoggedDataset();
      data.heldout.reset();
      cell.data = std::move(data);
    } catch (const std::exception& error) {
      cell.error = error.what();
    }
  });

  nlohmann::json trials = nlohmann::json::array();
  for (const auto& cell : cells) {
    if (!cell.data) {
      outcome.failures.push_back("n=" + std::to_string(cell.n) + " trial=" + std::to_string(cell.trial) + ": " +
                                 cell.error);
      continue;
    }
    nlohmann::json selections = nlohmann::json::array();
    for (const auto& report : cell.reports) {
      selections.push_back(to_json(report));
    }
    nlohmann::json values = nlohmann::json::array();
    for (const double v : cell.data->test_values) {
      values.push_back(number_to_json(v));
    }
    trials.push_back({{"n", cell.data->n},
                      {"trial", cell.trial},
                      {"test_values", values},
                      {"best_test_value", *std::max_element(cell.data->test_values.begin(), cell.data->test_values.end())},
                      {"selections", selections}});
  }

  // Summary: per method and size, the chosen policy's test reward over trials.
  nlohmann::json summary = nlohmann::json::array();
  Table long_table;
  long_table.header = {"method", "n", "trials", "abstentions", "mean", "std"};
  Table wide;
  wide.header = {"method"};
  for (const auto n : sizes) {
    wide.header.push_back(n == 0 ? "all" : std::to_string(n));
  }
  auto summarize = [&](const std::string& name, const std::function<std::optional<double>(const Cell&)>& value) {
    std::vector<std::string> row = {name};
    for (const auto n : sizes) {
      std::vector<double> values;
      int abstentions = 0;
      int count = 0;
      for (const auto& cell : cells) {
        if (cell.n != n || !cell.data) {
          continue;
        }
        ++count;
        if (const auto v = value(cell)) {
          values.push_back(*v);
        } else {
          ++abstentions;
        }
      }
      double mean = -std::numeric_limits<double>::infinity();
      double spread = std::numeric_limits<double>::quiet_NaN();
      if (abstentions == 0 && !values.empty()) {
        mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
        double square = 0.0;
        for (const double v : values) {
          square += (v - mean) * (v - mean);
        }
        spread = std::sqrt(square / static_cast<double>(values.size()));
      }
      summary.push_back({{"method", name},
                         {"n", n},
                         {"trials", count},
                         {"abstentions", abstentions},
                         {"mean", number_to_json(mean)},
                         {"std", number_to_json(spread)}});
      long_table.rows.push_back({name, std::to_string(n), std::to_string(count), std::to_string(abstentions),
                                 format_cell(mean, 4), format_cell(spread, 4)});
      row.push_back(mean_std_cell(values, abstentions > 0));
    }
    wide.rows.push_back(std::move(row));
  };
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    summarize(method_name(config.methods[m]), [m](const Cell& cell) { return cell.reports[m].test_value; });
  }
  summarize("best on test set", [](const Cell& cell) -> std::optional<double> {
    return *std::max_element(cell.data->test_values.begin(), cell.data->test_values.end());
  });

  outcome.document = {{"command", "select"},
                      {"delta", delta},
                      {"targets", [&] {
                         nlohmann::json names = nlohmann::json::array();
                         for (const auto& target : config.targets) {
                           names.push_back(target.name);
                         }
                         return names;
                       }()},
                      {"summary", summary},
                      {"trials", trials},
                      {"failures", outcome.failures}};
  write_report(outcome, config, "select.json", dump(outcome.document));
  write_report(outcome, config, "select_summary.csv", long_table.to_csv());
  write_report(outcome, config, "select_summary.md", wide.to_markdown());
  write_manifest(outcome, config, options, "select");
  return outcome;
}

RunOutcome run_coverage(const RunConfig& config, const RunOptions& options) {
  RunOutcome outcome;
  const auto csv = load_csv_source(config);
  std::vector<Method> methods;
  for (const Method method : config.methods) {
    if (is_bound_method(method)) {
      methods.push_back(method);
    }
  }
  if (methods.empty()) {
    throw ConfigError("methods", "coverage needs at least one lower-bound method");
  }
  const auto& deltas = config.coverage_deltas;
  if (deltas.empty()) {
    throw ConfigError("coverage_deltas", "the delta grid is empty");
  }
  const Eigen::Index n = config.dataset.kind == DatasetSpec::Kind::kCsv ? 0 : config.sizes.front();
  const bool reward_model = needs_any_reward_model(methods);
  const bool test_sample = needs_test_sample(config);

  // bounds[trial][target][delta][method]
  using Grid = std::vector<std::vector<std::vector<double>>>;
  struct TrialResult {
    bool ok = false;
    std::string error;
    std::vector<double> true_values;
    std::vector<double> n_eff;
    Grid bounds;
  };
  std::vector<TrialResult> results(static_cast<std::size_t>(config.trials));
  const int mc_workers = config.trials > 1 ? 1 : options.jobs;
  parallel_for(results.size(), options.jobs, [&](std::size_t t) {
    TrialResult& result = results[t];
    try {
      const TrialData data =
          build_trial(config, {n, static_cast<int>(t), reward_model, test_sample}, csv ? &*csv : nullptr);
      const auto size = data.logged.size();
      const double lambda = default_lambda(size);
      result.true_values = data.true_values;
      for (std::size_t i = 0; i < data.targets.size(); ++i) {
        const auto& target = data.targets[i];
        const auto weights = importance_weights(target, data.logged.behavior, data.logged.actions);
        const double v_hat = wis_estimate(weights, data.logged.rewards);
        result.n_eff.push_back(weights.sum() > 0.0 ? effective_sample_size(weights) : 0.0);
        const MCOptions mc{derive_seed(trial_key(config, n, static_cast<int>(t)), {kCoverageStream, i}),
                           config.schedule, mc_workers};
        // A fixed schedule does not depend on delta, so one simulation serves the whole grid.
        std::optional<VarianceProxies> proxies;
        if (std::holds_alternative<FixedSchedule>(config.schedule) &&
            std::find(methods.begin(), methods.end(), Method::kEslb) != methods.end()) {
          proxies = mc_estimate_proxies(target, data.logged.behavior, weights, mc);
        }
        std::vector<std::vector<double>> per_delta;
        for (const double delta : deltas) {
          std::vector<double> per_method;
          for (const Method method : methods) {
            const double x = corrected_exponent(method, delta, 1);
            switch (method) {
              case Method::kEslb:
                per_method.push_back(proxies ? eslb_bound(*proxies, v_hat, size, x).lower_bound
                                             : eslb(target, data.logged.behavior, data.logged.actions,
                                                    data.logged.rewards, ConfidenceSpec::for_eslb(delta), mc)
                                                   .lower_bound);
                break;
              case Method::kLambdaIs:
                per_method.push_back(lambda_is_bound(data.logged, target, lambda, x).lower_bound);
                break;
              case Method::kLambdaDr: {
                const auto& heldout = data.data_for(method);
                per_method.push_back(lambda_dr_bound(heldout, data.targets_for(method)[i], *data.reward_model,
                                                     default_lambda(heldout.size()), x)
                                         .lower_bound);
                break;
              }
              case Method::kChebWis:
                per_method.push_back(chebyshev_wis_bound(data.logged, target, x).lower_bound);
                break;
              default:
                break;
            }
          }
          per_delta.push_back(std::move(per_method));
        }
        result.bounds.push_back(std::move(per_delta));
      }
      result.ok = true;
    } catch (const std::exception& error) {
      result.error = error.what();
    }
  });

  Table rows;
  rows.header = {"delta", "trial", "target", "method", "lower_bound", "true_value", "width", "violation", "n_eff"};
  nlohmann::json trials = nlohmann::json::array();
  std::size_t num_targets = config.targets.size();
  for (std::size_t t = 0; t < results.size(); ++t) {
    const auto& result = results[t];
    if (!result.ok) {
      outcome.failures.push_back("trial=" + std::to_string(t) + ": " + result.error);
      continue;
    }
    nlohmann::json entry = {{"trial", t}, {"n_eff", result.n_eff}};
    nlohmann::json bounds = nlohmann::json::array();
    for (std::size_t i = 0; i < num_targets; ++i) {
      for (std::size_t d = 0; d < deltas.size(); ++d) {
        for (std::size_t m = 0; m < methods.size(); ++m) {
          const double bound = result.bounds[i][d][m];
          const double truth = result.true_values[i];
          bounds.push_back({{"target", config.targets[i].name},
                            {"delta", deltas[d]},
                            {"method", method_name(methods[m])},
                            {"lower_bound", number_to_json(bound)}});
          rows.rows.push_back({format_cell(deltas[d], 4), std::to_string(t), config.targets[i].name,
                               method_name(methods[m]), format_cell(bound, 6), format_cell(truth, 6),
                               format_cell(truth - bound, 6), bound > truth ? "1" : "0",
                               format_cell(result.n_eff[i], 2)});
        }
      }
    }
    entry["bounds"] = std::move(bounds);
    trials.push_back(std::move(entry));
  }

  Table summary_table;
  summary_table.header = {"target", "delta", "method", "trials", "violations", "violation_rate",
                          "vacuous", "median_lower_bound", "median_width"};
  nlohmann::json summary = nlohmann::json::array();
  nlohmann::json targets = nlohmann::json::array();
  for (std::size_t i = 0; i < num_targets; ++i) {
    std::vector<double> n_eff;
    double truth = std::numeric_limits<double>::quiet_NaN();
    for (const auto& result : results) {
      if (result.ok) {
        n_eff.push_back(result.n_eff[i]);
        truth = result.true_values[i];
      }
    }
    targets.push_back({{"name", config.targets[i].name},
                       {"true_value", number_to_json(truth)},
                       {"median_n_eff", number_to_json(median(n_eff))}});
    for (std::size_t d = 0; d < deltas.size(); ++d) {
      for (std::size_t m = 0; m < methods.size(); ++m) {
        std::vector<double> lower;
        std::vector<double> width;
        int violations = 0;
        int vacuous = 0;
        for (const auto& result : results) {
          if (!result.ok) {
            continue;
          }
          const double bound = result.bounds[i][d][m];
          lower.push_back(bound);
          width.push_back(result.true_values[i] - bound);
          violations += bound > result.true_values[i] ? 1 : 0;
          vacuous += bound > 0.0 ? 0 : 1;
        }
        const double rate = lower.empty() ? 0.0 : static_cast<double>(violations) / static_cast<double>(lower.size());
        summary.push_back({{"target", config.targets[i].name},
                           {"delta", deltas[d]},
                           {"method", method_name(methods[m])},
                           {"trials", lower.size()},
                           {"violations", violations},
                           {"violation_rate", rate},
                           {"vacuous", vacuous},
                           {"median_lower_bound", number_to_json(median(lower))},
                           {"median_width", number_to_json(median(width))}});
        summary_table.rows.push_back({config.targets[i].name, format_cell(deltas[d], 4), method_name(methods[m]),
                                      std::to_string(lower.size()), std::to_string(violations), format_cell(rate, 3),
                                      std::to_string(vacuous), format_cell(median(lower), 4),
                                      format_cell(median(width), 4)});
      }
    }
  }

  outcome.document = {{"command", "coverage"}, {"n", n},           {"deltas", deltas},
                      {"targets", targets},    {"summary", summary}, {"trials", trials},
                      {"failures", outcome.failures}};
  write_report(outcome, config, "coverage.json", dump(outcome.document));
  write_report(outcome, config, "coverage.csv", rows.to_csv());
  write_report(outcome, config, "coverage_summary.csv", summary_table.to_csv());
  write_report(outcome, config, "coverage_summary.md", summary_table.to_markdown());
  write_manifest(outcome, config, options, "coverage");
  return outcome;
}

}  // namespace ope
