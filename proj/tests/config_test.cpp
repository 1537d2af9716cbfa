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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace {

constexpr const char* kToml = R"(
seed = 17
trials = 3
sizes = [500, 1000]
delta = 0.02
methods = ["ESLB", "lambda-DR"]
eta_split = 0.5
out = "runs/a"

[dataset]
dimension = 8
informative_dims = 4
num_classes = 4

[behavior]
tau = 0.3
faulty = [1, 2]

[[targets]]
name = "ideal"
kind = "gibbs"
tau = 0.2

[[targets]]
name = "learned"
kind = "fitted-wis"
steps = 50

[mc]
schedule = "adaptive"
eps = 0.001
batch = 4
)";

std::string field_of(const std::string& toml) {
  try {
    ope::config_from_json(ope::toml_to_json(toml));
  } catch (const ope::ConfigError& error) {
    return error.field();
  }
  return "(no error)";
}

TEST(Config, ParsesToml) {
  const auto config = ope::config_from_json(ope::toml_to_json(kToml));
  EXPECT_EQ(config.seed, 17U);
  EXPECT_EQ(config.trials, 3);
  EXPECT_EQ(config.sizes, (std::vector<Eigen::Index>{500, 1000}));
  EXPECT_DOUBLE_EQ(*config.delta, 0.02);
  EXPECT_EQ(config.methods, (std::vector<ope::Method>{ope::Method::kEslb, ope::Method::kLambdaDr}));
  EXPECT_DOUBLE_EQ(config.eta_split, 0.5);
  EXPECT_EQ(config.out, std::filesystem::path("runs/a"));
  EXPECT_EQ(config.dataset.generator.dimension, 8);
  EXPECT_EQ(config.dataset.generator.informative_dims, 4);
  EXPECT_EQ(config.behavior.faulty, (std::vector<int>{1, 2}));
  ASSERT_EQ(config.targets.size(), 2U);
  EXPECT_EQ(config.targets[1].kind, ope::TargetKind::kFittedWis);
  EXPECT_DOUBLE_EQ(config.targets[1].tau, 0.1);
  EXPECT_EQ(config.targets[1].steps, 50);
  const auto& adaptive = std::get<ope::AdaptiveSchedule>(config.schedule);
  EXPECT_DOUBLE_EQ(adaptive.eps, 0.001);
  EXPECT_EQ(adaptive.batch, 4);
}

TEST(Config, JsonAndTomlAgree) {
  const auto from_toml = ope::config_from_json(ope::toml_to_json(kToml));
  const auto round = ope::config_from_json(ope::to_json(from_toml));
  EXPECT_EQ(ope::to_json(round).dump(), ope::to_json(from_toml).dump());
}

TEST(Config, LoadsByExtension) {
  const auto dir = std::filesystem::temp_directory_path() / "ope_config_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "run.toml") << kToml;
    std::ofstream(dir / "run.json") << ope::to_json(ope::config_from_json(ope::toml_to_json(kToml))).dump();
  }
  const auto a = ope::load_config(dir / "run.toml");
  const auto b = ope::load_config(dir / "run.json");
  EXPECT_EQ(ope::to_json(a).dump(), ope::to_json(b).dump());
  EXPECT_THROW(ope::load_config(dir / "missing.toml"), ope::ConfigError);
  std::filesystem::remove_all(dir);
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(field_of("[[targets]]\ntau = -1\n"), "targets[0].tau");
  EXPECT_EQ(field_of("[[targets]]\n[[targets]]\nkind = \"tree\"\n"), "targets[1].kind");
  EXPECT_EQ(field_of("[[targets]]\n[behavior]\nfaulty = [9]\n"), "behavior.faulty[0]");
  EXPECT_EQ(field_of("trials = 0\n[[targets]]\n"), "trials");
  EXPECT_EQ(field_of("delta = 1.5\n[[targets]]\n"), "delta");
  EXPECT_EQ(field_of("colour = 1\n[[targets]]\n"), "colour");
  EXPECT_EQ(field_of("[dataset]\nnoise = 1\n[[targets]]\n"), "dataset.noise");
  EXPECT_EQ(field_of("methods = [\"ESLB\", \"magic\"]\n[[targets]]\n"), "methods[1]");
  EXPECT_EQ(field_of("sizes = [1]\n[[targets]]\n"), "sizes[0]");
  EXPECT_EQ(field_of("seed = \"x\"\n[[targets]]\n"), "seed");
  EXPECT_EQ(field_of("seed = 1\n"), "targets");
  EXPECT_EQ(field_of("this is not toml"), "(document)");
}

TEST(Config, SeedPrecedenceIsFlagThenEnvironmentThenFile) {
  auto config = ope::config_from_json(ope::toml_to_json(kToml));
  ope::ConfigOverrides none;
  EXPECT_EQ(ope::apply_overrides(config, none, nullptr).source, "config");
  EXPECT_EQ(config.seed, 17U);

  auto env = config;
  const auto from_env = ope::apply_overrides(env, none, "123");
  EXPECT_EQ(from_env.source, "env");
  EXPECT_EQ(env.seed, 123U);

  auto flagged = config;
  ope::ConfigOverrides flag;
  flag.seed = 9;
  const auto from_flag = ope::apply_overrides(flagged, flag, "123");
  EXPECT_EQ(from_flag.source, "flag");
  EXPECT_EQ(flagged.seed, 9U);

  auto bad = config;
  EXPECT_THROW(ope::apply_overrides(bad, none, "12abc"), ope::ConfigError);
}

TEST(Config, OverridesReplaceFields) {
  auto config = ope::config_from_json(ope::toml_to_json(kToml));
  ope::ConfigOverrides overrides;
  overrides.out = "elsewhere";
  overrides.methods = {ope::Method::kChebWis};
  overrides.delta = 0.1;
  overrides.trials = 8;
  overrides.eta_split = 0.0;
  overrides.mc_iterations = 40;
  ope::apply_overrides(config, overrides, nullptr);
  EXPECT_EQ(config.out, std::filesystem::path("elsewhere"));
  EXPECT_EQ(config.methods, (std::vector<ope::Method>{ope::Method::kChebWis}));
  EXPECT_DOUBLE_EQ(*config.delta, 0.1);
  EXPECT_EQ(config.trials, 8);
  EXPECT_DOUBLE_EQ(config.eta_split, 0.0);
  EXPECT_EQ(std::get<ope::FixedSchedule>(config.schedule).iterations, 40);

  ope::ConfigOverrides adaptive;
  adaptive.mc_adaptive_eps = 0.01;
  ope::apply_overrides(config, adaptive, nullptr);
  EXPECT_DOUBLE_EQ(std::get<ope::AdaptiveSchedule>(config.schedule).eps, 0.01);

  ope::ConfigOverrides invalid;
  invalid.trials = 0;
  EXPECT_THROW(ope::apply_overrides(config, invalid, nullptr), ope::ConfigError);
}

TEST(Config, BundledConfigsAreValid) {
  for (const char* name : {"table1.toml", "coverage.toml", "matched.toml"}) {
    const auto path = std::filesystem::path(OPE_SOURCE_DIR) / "configs" / name;
    EXPECT_NO_THROW(ope::load_config(path)) << name;
  }
}

}  // namespace
