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

#include <ope/config.hpp>
#include <ope/experiment.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::string> methods;
  std::optional<double> delta;
  std::optional<int> trials;
  std::optional<double> eta_split;
  std::optional<std::int64_t> mc_iterations;
  std::optional<double> mc_adaptive_eps;
  int jobs = 1;
};

void add_flags(CLI::App& command, Flags& flags) {
  command.add_option("--config", flags.config, "Run configuration (TOML, or JSON by extension)")
      ->required()
      ->check(CLI::ExistingFile);
  command.add_option("--seed", flags.seed, "Master seed; overrides OPE_SEED and the config");
  command.add_option("--out", flags.out, "Output directory");
  command.add_option("--method", flags.methods, "Method(s): ESLB, lambda-IS, lambda-DR, Cheb-WIS, DR, IS, WIS");
  command.add_option("--delta", flags.delta, "Error probability")->check(CLI::Range(0.0, 1.0));
  command.add_option("--trials", flags.trials, "Number of trials")->check(CLI::PositiveNumber);
  command.add_option("--eta-split", flags.eta_split, "Fraction of logged rows reserved for the reward model");
  auto* iterations =
      command.add_option("--mc-iterations", flags.mc_iterations, "Fixed Monte-Carlo schedule with this many iterations");
  auto* adaptive =
      command.add_option("--mc-adaptive-eps", flags.mc_adaptive_eps, "Adaptive Monte-Carlo schedule with this precision");
  iterations->excludes(adaptive);
  command.add_option("--jobs", flags.jobs, "Worker threads; reports do not depend on it")->check(CLI::PositiveNumber);
}

int run(const std::string& name, const Flags& flags) {
  ope::RunConfig config = ope::load_config(flags.config);
  ope::ConfigOverrides overrides;
  overrides.seed = flags.seed;
  if (flags.out) {
    overrides.out = *flags.out;
  }
  for (const auto& method : flags.methods) {
    overrides.methods.push_back(ope::parse_method(method));
  }
  overrides.delta = flags.delta;
  overrides.trials = flags.trials;
  overrides.eta_split = flags.eta_split;
  overrides.mc_iterations = flags.mc_iterations;
  overrides.mc_adaptive_eps = flags.mc_adaptive_eps;
  const auto seed = ope::apply_overrides(config, overrides, std::getenv("OPE_SEED"));

  const ope::RunOptions options{flags.jobs, seed.source};
  ope::RunOutcome outcome;
  if (name == "generate") {
    outcome = ope::run_generate(config, options);
  } else if (name == "evaluate") {
    outcome = ope::run_evaluate(config, options);
  } else if (name == "select") {
    outcome = ope::run_select(config, options);
  } else {
    outcome = ope::run_coverage(config, options);
  }
  for (const auto& file : outcome.files) {
    std::cout << file.string() << '\n';
  }
  for (const auto& failure : outcome.failures) {
    std::cerr << "failed: " << failure << '\n';
  }
  return outcome.ok() ? EXIT_SUCCESS : EXIT_FAILURE;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Off-policy evaluation lower bounds and best-policy selection"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"generate", "Generate a synthetic dataset and its logged interactions"},
      {"evaluate", "Lower bounds with their decomposition for every target and method"},
      {"select", "Best-policy selection over repeated trials"},
      {"coverage", "Coverage and width of the lower bounds over a delta grid"},
  };
  for (const auto& [name, description] : commands) {
    add_flags(*app.add_subcommand(name, description), flags);
  }
  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return run(name, flags);
  } catch (const std::exception& error) {
    std::cerr << "ope " << name << ": " << error.what() << '\n';
    return 2;
  }
}
