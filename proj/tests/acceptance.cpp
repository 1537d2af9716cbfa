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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero on any failure.

#include <ope/eslb.hpp>
#include <ope/experiment.hpp>
#include <ope/policies.hpp>
#include <ope/report.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

Eigen::MatrixXd random_stochastic(int rows, int cols, std::mt19937_64& rng, double floor) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd probs(rows, cols);
  for (auto& v : probs.reshaped()) {
    v = floor + unit(rng);
  }
  return probs.array().colwise() / probs.rowwise().sum().array();
}

struct Instance {
  ope::PolicyTable target;
  ope::PolicyTable behavior;
  Eigen::VectorXd weights;
};

Instance random_instance(int n, int k, std::mt19937_64& rng) {
  const Eigen::MatrixXd behavior = random_stochastic(n, k, rng, 0.1);
  const Eigen::MatrixXd target = random_stochastic(n, k, rng, 0.02);
  Eigen::VectorXd weights(n);
  for (int i = 0; i < n; ++i) {
    std::discrete_distribution<int> draw(behavior.row(i).data(), behavior.row(i).data() + k);
    const int a = draw(rng);
    weights[i] = target(i, a) / behavior(i, a);
  }
  return {ope::PolicyTable(target), ope::PolicyTable(behavior), weights};
}

/// Instance sizes with K^n no larger than 3^6.
std::pair<int, int> enumerable_shape(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(1, 6);
  std::uniform_int_distribution<int> arms(2, 3);
  return {size(rng), arms(rng)};
}

/// Equal values (including two infinities) agree; otherwise the gap must lie within 3 standard errors.
bool within(double estimate, double exact, double stderr_) {
  return estimate == exact || std::abs(estimate - exact) <= 3.0 * stderr_ + 1e-12;
}

Outcome enumeration_equivalence() {
  std::mt19937_64 rng(101);
  int agree = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto [n, k] = enumerable_shape(rng);
    const auto inst = random_instance(n, k, rng);
    const auto exact = ope::exact_proxies_enumeration(inst.target, inst.behavior, inst.weights);
    const auto mc = ope::mc_estimate_proxies(inst.target, inst.behavior, inst.weights,
                                             {static_cast<std::uint64_t>(1000 + trial), ope::FixedSchedule{100000, 1}, 1});
    agree += within(mc.V, exact.V, mc.V_stderr) && within(mc.U, exact.U, mc.U_stderr) &&
                     within(mc.z_inv, exact.z_inv, mc.z_inv_stderr)
                 ? 1
                 : 0;
  }
  return {agree >= 48, std::to_string(agree) + "/50 instances within 3 standard errors"};
}

Outcome matched_closed_forms() {
  double worst = 0.0;
  for (const int n : {2, 10, 1000}) {
    Eigen::MatrixXd probs(n, 3);
    probs.rowwise() = Eigen::RowVector3d(0.1, 0.6, 0.3);
    const ope::PolicyTable table(probs);
    const auto proxies =
        ope::mc_estimate_proxies(table, table, Eigen::VectorXd::Ones(n), {7, ope::FixedSchedule{50, 2}, 1});
    const double nd = n;
    worst = std::max({worst, std::abs(proxies.V - 4.0 / nd) * nd, std::abs(proxies.U - 1.0 / nd) * nd,
                      std::abs(proxies.B - (nd - 1.0) / nd)});
  }
  std::ostringstream detail;
  detail << "largest relative deviation " << worst;
  return {worst <= 1e-12, detail.str()};
}

Outcome one_hot_identity() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto [n, k] = enumerable_shape(rng);
    const auto inst = random_instance(n, k, rng);
    std::uniform_int_distribution<int> label(1, k);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) {
      l = label(rng);
    }
    const auto sides = ope::one_hot_identity_sides(inst.target, inst.behavior, labels);
    worst = std::max(worst, std::abs(sides.lhs - sides.rhs));
  }
  std::ostringstream detail;
  detail << "largest |lhs - rhs| " << worst;
  return {worst <= 1e-12, detail.str()};
}

int jobs() { return static_cast<int>(std::max(1U, std::thread::hardware_concurrency())); }

ope::RunConfig bundled(const std::string& name, const fs::path& out) {
  auto config = ope::load_config(fs::path(OPE_SOURCE_DIR) / "configs" / name);
  config.out = out;
  return config;
}

double number(const nlohmann::json& value) { return ope::number_from_json(value); }

const nlohmann::json* summary_row(const nlohmann::json& summary, const std::string& method, double delta) {
  for (const auto& row : summary) {
    if (row.at("method") == method && std::abs(row.at("delta").get<double>() - delta) < 1e-12) {
      return &row;
    }
  }
  return nullptr;
}

struct CoverageStudy {
  nlohmann::json document;
  std::string error;
};

CoverageStudy run_coverage_study(const fs::path& out) {
  try {
    auto outcome = ope::run_coverage(bundled("coverage.toml", out), {jobs(), "config"});
    if (!outcome.ok()) {
      return {{}, outcome.failures.front()};
    }
    return {outcome.document, ""};
  } catch (const std::exception& error) {
    return {{}, error.what()};
  }
}

Outcome coverage(const CoverageStudy& study) {
  if (!study.error.empty()) {
    return {false, study.error};
  }
  int violations = 0;
  int cells = 0;
  for (const auto& row : study.document.at("summary")) {
    violations += row.at("violations").get<int>();
    cells += row.at("trials").get<int>();
  }
  return {violations == 0 && cells == 100 * 4 * 4,
          std::to_string(violations) + " violations over " + std::to_string(cells) + " bounds"};
}

Outcome tightness(const CoverageStudy& study) {
  if (!study.error.empty()) {
    return {false, study.error};
  }
  const auto& summary = study.document.at("summary");
  const auto* eslb = summary_row(summary, "ESLB", 0.05);
  const auto* cheb = summary_row(summary, "Cheb-WIS", 0.05);
  if (eslb == nullptr || cheb == nullptr) {
    return {false, "missing summary rows"};
  }
  const double eslb_width = number(eslb->at("median_width"));
  const double cheb_width = number(cheb->at("median_width"));
  const bool eslb_informative = eslb->at("vacuous").get<int>() == 0;
  const bool cheb_worse = cheb->at("vacuous").get<int>() > 0 || cheb_width > eslb_width;
  std::ostringstream detail;
  detail << "median width ESLB " << eslb_width << ", Cheb-WIS " << cheb_width << "; vacuous ESLB "
         << eslb->at("vacuous") << ", Cheb-WIS " << cheb->at("vacuous");
  return {eslb_width < cheb_width && eslb_informative && cheb_worse, detail.str()};
}

Outcome selection_benchmark(const fs::path& out) {
  try {
    const auto outcome = ope::run_select(bundled("table1.toml", out), {jobs(), "config"});
    if (!outcome.ok()) {
      return {false, outcome.failures.front()};
    }
    const auto& summary = outcome.document.at("summary");
    bool pass = true;
    std::ostringstream detail;
    for (const int n : {5000, 10000, 20000}) {
      double eslb = -INFINITY;
      double best_baseline = -INFINITY;
      std::string best_name = "none";
      for (const auto& row : summary) {
        if (row.at("n").get<int>() != n) {
          continue;
        }
        const std::string method = row.at("method");
        const double mean = number(row.at("mean"));
        if (method == "ESLB") {
          eslb = mean;
        } else if (method != "best on test set" && mean > best_baseline) {
          best_baseline = mean;
          best_name = method;
        }
        if (n == 5000 && (method == "lambda-DR" || method == "Cheb-WIS")) {
          const bool vacuous = row.at("abstentions").get<int>() > 0;
          pass = pass && vacuous;
          detail << method << "@5000 " << (vacuous ? "-inf" : "finite") << "; ";
        }
      }
      pass = pass && eslb >= 0.98 && eslb >= best_baseline;
      detail << "n=" << n << " ESLB " << eslb << " best baseline " << best_name << " " << best_baseline << "; ";
    }
    return {pass, detail.str()};
  } catch (const std::exception& error) {
    return {false, error.what()};
  }
}

Outcome stopping_rule() {
  std::mt19937_64 rng(303);
  int good = 0;
  int terminated = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto [n, k] = enumerable_shape(rng);
    const auto inst = random_instance(n, k, rng);
    const auto exact = ope::exact_proxies_enumeration(inst.target, inst.behavior, inst.weights);
    ope::AdaptiveSchedule schedule;
    schedule.eps = 0.0;
    const auto mc = ope::mc_estimate_proxies(inst.target, inst.behavior, inst.weights,
                                             {static_cast<std::uint64_t>(5000 + trial), schedule, 1});
    terminated += mc.converged ? 1 : 0;
    good += mc.converged && std::abs(mc.V - exact.V) <= 1.0 / n ? 1 : 0;
  }
  return {good >= 198, std::to_string(terminated) + "/200 converged, " + std::to_string(good) +
                           "/200 within eps of the enumerated V"};
}

Outcome gradient_check() {
  std::mt19937_64 rng(404);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 15;
    const int d = 3;
    const int k = 2 + trial % 3;
    Eigen::MatrixXd contexts(n, d);
    for (auto& v : contexts.reshaped()) {
      v = normal(rng);
    }
    std::vector<int> actions(n);
    Eigen::VectorXd rewards(n);
    std::uniform_int_distribution<int> action(1, k);
    for (int i = 0; i < n; ++i) {
      actions[static_cast<std::size_t>(i)] = action(rng);
      rewards[i] = unit(rng) < 0.5 ? 1.0 : 0.0;
    }
    const ope::LoggedDataset data(contexts, actions, rewards, ope::PolicyTable(random_stochastic(n, k, rng, 0.1)));
    Eigen::MatrixXd theta(d, k);
    for (auto& v : theta.reshaped()) {
      v = 0.5 * normal(rng);
    }
    for (const auto objective : {ope::FitObjective::kImportanceSampling, ope::FitObjective::kWeightedImportanceSampling}) {
      const auto analytic = ope::policy_objective(data, theta, 0.5, objective);
      constexpr double h = 1e-5;
      for (Eigen::Index entry = 0; entry < theta.size(); ++entry) {
        Eigen::MatrixXd plus = theta;
        Eigen::MatrixXd minus = theta;
        plus.reshaped()[entry] += h;
        minus.reshaped()[entry] -= h;
        const double numeric = (ope::policy_objective(data, plus, 0.5, objective).value -
                                ope::policy_objective(data, minus, 0.5, objective).value) /
                               (2.0 * h);
        const double error = std::abs(analytic.gradient.reshaped()[entry] - numeric) / std::max(std::abs(numeric), 1e-3);
        worst = std::max(worst, error);
      }
    }
  }
  std::ostringstream detail;
  detail << "largest relative error " << worst;
  return {worst <= 1e-4, detail.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream input(path, std::ios::binary);
  std::stringstream buffer;
  buffer << input.rdbuf();
  return buffer.str();
}

Outcome determinism(const fs::path& root) {
  using Runner = std::function<ope::RunOutcome(const ope::RunConfig&, const ope::RunOptions&)>;
  struct Case {
    std::string name;
    Runner run;
    std::string report;
    ope::RunConfig config;
  };
  auto evaluate = bundled("coverage.toml", "");
  evaluate.sizes = {3000};
  auto coverage = evaluate;
  coverage.trials = 6;
  coverage.schedule = ope::FixedSchedule{20, 5};
  auto select = bundled("table1.toml", "");
  select.sizes = {1000, 2000};
  select.trials = 3;
  select.test_size = 2000;
  for (auto& target : select.targets) {
    target.steps = std::min(target.steps, 50);
  }
  select.schedule = ope::FixedSchedule{20, 5};
  std::vector<Case> cases = {{"evaluate", ope::run_evaluate, "evaluate.json", evaluate},
                             {"select", ope::run_select, "select.json", select},
                             {"coverage", ope::run_coverage, "coverage.json", coverage}};
  std::ostringstream detail;
  bool pass = true;
  try {
    for (auto& c : cases) {
      std::string reports[2];
      const int workers[2] = {1, 8};
      for (int r = 0; r < 2; ++r) {
        c.config.out = root / (c.name + "_" + std::to_string(workers[r]));
        c.run(c.config, {workers[r], "config"});
        reports[r] = slurp(c.config.out / c.report);
      }
      const bool same = !reports[0].empty() && reports[0] == reports[1];
      pass = pass && same;
      detail << c.name << (same ? " identical" : " DIFFERS") << "; ";
    }
  } catch (const std::exception& error) {
    return {false, error.what()};
  }
  return {pass, detail.str()};
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "ope_acceptance";
  fs::remove_all(root);
  bool all = true;
  auto report = [&](int number, const std::string& name, const std::function<Outcome()>& check) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& error) {
      outcome = {false, error.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all = all && outcome.pass;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << number << " (" << name << "): " << outcome.detail
              << " [" << std::round(seconds * 10.0) / 10.0 << " s]" << std::endl;
  };

  report(1, "Monte-Carlo proxies match enumeration", enumeration_equivalence);
  report(2, "matched-policy closed forms", matched_closed_forms);
  report(3, "one-hot identity", one_hot_identity);
  CoverageStudy study;
  report(4, "coverage", [&] {
    study = run_coverage_study(root / "coverage");
    return coverage(study);
  });
  report(5, "tightness ordering", [&] { return tightness(study); });
  report(6, "selection benchmark", [&] { return selection_benchmark(root / "table1"); });
  report(7, "adaptive stopping rule", stopping_rule);
  report(8, "gradient check", gradient_check);
  report(9, "determinism across worker counts", [&] { return determinism(root / "determinism"); });

  fs::remove_all(root);
  return all ? 0 : 1;
}
