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

#include <toml.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ope {

ConfigError::ConfigError(std::string field, const std::string& message)
    : std::runtime_error("config: " + field + ": " + message), field_(std::move(field)) {}

namespace {

nlohmann::json toml_node_to_json(const toml::node& node) {
  if (const auto* table = node.as_table()) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [key, value] : *table) {
      out[std::string(key.str())] = toml_node_to_json(value);
    }
    return out;
  }
  if (const auto* array = node.as_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& value : *array) {
      out.push_back(toml_node_to_json(value));
    }
    return out;
  }
  if (const auto* value = node.as_string()) {
    return value->get();
  }
  if (const auto* value = node.as_integer()) {
    return value->get();
  }
  if (const auto* value = node.as_floating_point()) {
    return value->get();
  }
  if (const auto* value = node.as_boolean()) {
    return value->get();
  }
  throw ConfigError("(document)", "dates and times are not supported");
}

/// Reads typed fields of one JSON object and rejects keys that were never read.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) {
      throw ConfigError(path_.empty() ? "(document)" : path_, "expected a table");
    }
  }

  [[nodiscard]] std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[nodiscard]] const nlohmann::json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const auto* value = find(key);
    if (value == nullptr) {
      return fallback;
    }
    if (!value->is_number()) {
      throw ConfigError(field(key), "expected a number");
    }
    return value->get<double>();
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    const auto* value = find(key);
    if (value == nullptr) {
      return fallback;
    }
    if (!value->is_number_integer()) {
      throw ConfigError(field(key), "expected an integer");
    }
    return value->get<std::int64_t>();
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    const auto* value = find(key);
    if (value == nullptr) {
      return fallback;
    }
    if (value->is_number_unsigned()) {
      return value->get<std::uint64_t>();
    }
    if (value->is_number_integer() && value->get<std::int64_t>() >= 0) {
      return static_cast<std::uint64_t>(value->get<std::int64_t>());
    }
    throw ConfigError(field(key), "expected a non-negative integer");
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const auto* value = find(key);
    if (value == nullptr) {
      return fallback;
    }
    if (!value->is_string()) {
      throw ConfigError(field(key), "expected a string");
    }
    return value->get<std::string>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const auto* value = find(key);
    if (value == nullptr) {
      return fallback;
    }
    if (!value->is_boolean()) {
      throw ConfigError(field(key), "expected a boolean");
    }
    return value->get<bool>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    const auto* value = find(key);
    if (value == nullptr) {
      return fallback;
    }
    if (value->is_number()) {
      return {value->get<double>()};
    }
    if (!value->is_array()) {
      throw ConfigError(field(key), "expected a number or an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < value->size(); ++i) {
      if (!(*value)[i].is_number()) {
        throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "expected a number");
      }
      out.push_back((*value)[i].get<double>());
    }
    return out;
  }

  std::vector<std::int64_t> integers(const std::string& key, std::vector<std::int64_t> fallback) {
    const auto* value = find(key);
    if (value == nullptr) {
      return fallback;
    }
    if (value->is_number_integer()) {
      return {value->get<std::int64_t>()};
    }
    if (!value->is_array()) {
      throw ConfigError(field(key), "expected an integer or an array of integers");
    }
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < value->size(); ++i) {
      if (!(*value)[i].is_number_integer()) {
        throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "expected an integer");
      }
      out.push_back((*value)[i].get<std::int64_t>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key, std::vector<std::string> fallback) {
    const auto* value = find(key);
    if (value == nullptr) {
      return fallback;
    }
    if (value->is_string()) {
      return {value->get<std::string>()};
    }
    if (!value->is_array()) {
      throw ConfigError(field(key), "expected a string or an array of strings");
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < value->size(); ++i) {
      if (!(*value)[i].is_string()) {
        throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "expected a string");
      }
      out.push_back((*value)[i].get<std::string>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (seen_.count(key) == 0) {
        throw ConfigError(field(key), "unknown key");
      }
    }
  }

 private:
  const nlohmann::json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<int> to_actions(const std::vector<std::int64_t>& values) {
  return {values.begin(), values.end()};
}

DatasetSpec parse_dataset(const nlohmann::json& document) {
  ObjectReader reader(document, "dataset");
  DatasetSpec spec;
  const std::string kind = reader.string("kind", "synthetic");
  if (kind == "synthetic") {
    spec.kind = DatasetSpec::Kind::kSynthetic;
  } else if (kind == "csv") {
    spec.kind = DatasetSpec::Kind::kCsv;
  } else {
    throw ConfigError(reader.field("kind"), "expected \"synthetic\" or \"csv\"");
  }
  auto& generator = spec.generator;
  generator.dimension = reader.integer("dimension", generator.dimension);
  generator.informative_dims = static_cast<int>(reader.integer("informative_dims", generator.informative_dims));
  generator.num_classes = static_cast<int>(reader.integer("num_classes", generator.num_classes));
  generator.class_separation = reader.number("class_separation", generator.class_separation);
  generator.noise_scale = reader.number("noise_scale", generator.noise_scale);
  spec.csv_path = reader.string("path", "");
  spec.schema.label_column = reader.string("label_column", "");
  spec.schema.has_header = reader.boolean("has_header", true);
  spec.logged_fraction = reader.number("logged_fraction", spec.logged_fraction);
  reader.finish();
  return spec;
}

TargetSpec parse_target(const nlohmann::json& document, const std::string& path) {
  ObjectReader reader(document, path);
  TargetSpec spec;
  const std::string kind = reader.string("kind", "gibbs");
  if (kind == "gibbs") {
    spec.kind = TargetKind::kGibbs;
  } else if (kind == "fitted-is") {
    spec.kind = TargetKind::kFittedIs;
    spec.tau = 0.1;
  } else if (kind == "fitted-wis") {
    spec.kind = TargetKind::kFittedWis;
    spec.tau = 0.1;
  } else if (kind == "softmax-file") {
    spec.kind = TargetKind::kSoftmaxFile;
  } else {
    throw ConfigError(reader.field("kind"), "expected one of gibbs, fitted-is, fitted-wis, softmax-file");
  }
  spec.name = reader.string("name", kind);
  spec.tau = reader.number("tau", spec.tau);
  spec.faulty = to_actions(reader.integers("faulty", {}));
  spec.steps = static_cast<int>(reader.integer("steps", spec.steps));
  spec.step_size = reader.number("step_size", spec.step_size);
  spec.file = reader.string("file", "");
  reader.finish();
  return spec;
}

MCSchedule parse_schedule(const nlohmann::json& document) {
  ObjectReader reader(document, "mc");
  const std::string kind = reader.string("schedule", "fixed");
  MCSchedule schedule;
  if (kind == "fixed") {
    FixedSchedule fixed;
    fixed.iterations = reader.integer("iterations", fixed.iterations);
    fixed.batch = static_cast<int>(reader.integer("batch", fixed.batch));
    schedule = fixed;
  } else if (kind == "adaptive") {
    AdaptiveSchedule adaptive;
    adaptive.eps = reader.number("eps", adaptive.eps);
    adaptive.x = reader.number("x", 0.0);
    adaptive.batch = static_cast<int>(reader.integer("batch", adaptive.batch));
    adaptive.max_iterations = reader.integer("max_iterations", adaptive.max_iterations);
    schedule = adaptive;
  } else {
    throw ConfigError(reader.field("schedule"), "expected \"fixed\" or \"adaptive\"");
  }
  reader.finish();
  return schedule;
}

void check_actions(const std::vector<int>& actions, int num_actions, const std::string& field) {
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] < 1 || actions[i] > num_actions) {
      throw ConfigError(field + "[" + std::to_string(i) + "]", "action outside [1, " + std::to_string(num_actions) + "]");
    }
  }
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& document) {
  ObjectReader reader(document, "");
  RunConfig config;
  config.seed = reader.unsigned_integer("seed", config.seed);
  config.trials = static_cast<int>(reader.integer("trials", config.trials));
  const auto sizes = reader.integers("sizes", {});
  if (!sizes.empty()) {
    config.sizes.assign(sizes.begin(), sizes.end());
  }
  config.test_size = reader.integer("test_size", config.test_size);
  if (const auto* delta = reader.find("delta")) {
    if (!delta->is_number()) {
      throw ConfigError("delta", "expected a number");
    }
    config.delta = delta->get<double>();
  }
  config.coverage_deltas = reader.numbers("coverage_deltas", config.coverage_deltas);
  if (const auto* methods = reader.find("methods")) {
    const nlohmann::json wrapped = {{"methods", *methods}};
    ObjectReader wrapper(wrapped, "");
    config.methods.clear();
    const auto names = wrapper.strings("methods", {});
    for (std::size_t i = 0; i < names.size(); ++i) {
      try {
        config.methods.push_back(parse_method(names[i]));
      } catch (const std::invalid_argument& error) {
        throw ConfigError("methods[" + std::to_string(i) + "]", error.what());
      }
    }
  }
  config.eta_split = reader.number("eta_split", config.eta_split);
  config.reward_folds = static_cast<int>(reader.integer("reward_folds", config.reward_folds));
  config.out = reader.string("out", config.out.string());

  if (const auto* dataset = reader.find("dataset")) {
    config.dataset = parse_dataset(*dataset);
  }
  if (const auto* behavior = reader.find("behavior")) {
    ObjectReader sub(*behavior, "behavior");
    config.behavior.tau = sub.number("tau", config.behavior.tau);
    config.behavior.faulty = to_actions(sub.integers("faulty", {}));
    sub.finish();
  }
  if (const auto* targets = reader.find("targets")) {
    if (!targets->is_array()) {
      throw ConfigError("targets", "expected an array of tables");
    }
    for (std::size_t i = 0; i < targets->size(); ++i) {
      config.targets.push_back(parse_target((*targets)[i], "targets[" + std::to_string(i) + "]"));
    }
  }
  if (const auto* mc = reader.find("mc")) {
    config.schedule = parse_schedule(*mc);
  }
  reader.finish();
  config.validate();
  return config;
}

void RunConfig::validate() const {
  const int k = dataset.generator.num_classes;
  if (dataset.kind == DatasetSpec::Kind::kSynthetic) {
    try {
      GeneratorConfig probe = dataset.generator;
      probe.n = 1;
      probe.validate();
    } catch (const std::invalid_argument& error) {
      throw ConfigError("dataset", error.what());
    }
  } else {
    if (dataset.csv_path.empty()) {
      throw ConfigError("dataset.path", "a CSV path is required");
    }
    if (!(dataset.logged_fraction > 0.0 && dataset.logged_fraction < 1.0)) {
      throw ConfigError("dataset.logged_fraction", "must lie in (0, 1)");
    }
  }
  if (!(behavior.tau > 0.0)) {
    throw ConfigError("behavior.tau", "must be positive");
  }
  if (dataset.kind == DatasetSpec::Kind::kSynthetic) {
    check_actions(behavior.faulty, k, "behavior.faulty");
  }
  if (targets.empty()) {
    throw ConfigError("targets", "at least one target is required");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& target = targets[i];
    const std::string path = "targets[" + std::to_string(i) + "]";
    if (!(target.tau > 0.0)) {
      throw ConfigError(path + ".tau", "must be positive");
    }
    if (target.kind == TargetKind::kGibbs && dataset.kind == DatasetSpec::Kind::kSynthetic) {
      check_actions(target.faulty, k, path + ".faulty");
    }
    if ((target.kind == TargetKind::kFittedIs || target.kind == TargetKind::kFittedWis) &&
        (target.steps < 1 || !(target.step_size > 0.0))) {
      throw ConfigError(path, "fitted targets need steps >= 1 and step_size > 0");
    }
    if (target.kind == TargetKind::kSoftmaxFile && target.file.empty()) {
      throw ConfigError(path + ".file", "a policy file is required");
    }
  }
  if (methods.empty()) {
    throw ConfigError("methods", "at least one method is required");
  }
  if (delta && !(*delta > 0.0 && *delta < 1.0)) {
    throw ConfigError("delta", "must lie in (0, 1)");
  }
  for (std::size_t i = 0; i < coverage_deltas.size(); ++i) {
    if (!(coverage_deltas[i] > 0.0 && coverage_deltas[i] < 1.0)) {
      throw ConfigError("coverage_deltas[" + std::to_string(i) + "]", "must lie in (0, 1)");
    }
  }
  if (sizes.empty()) {
    throw ConfigError("sizes", "at least one sample size is required");
  }
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 2) {
      throw ConfigError("sizes[" + std::to_string(i) + "]", "must be at least 2");
    }
  }
  if (test_size < 1) {
    throw ConfigError("test_size", "must be positive");
  }
  if (trials < 1) {
    throw ConfigError("trials", "must be at least 1");
  }
  if (!(eta_split >= 0.0 && eta_split < 1.0)) {
    throw ConfigError("eta_split", "must lie in [0, 1)");
  }
  if (reward_folds < 2) {
    throw ConfigError("reward_folds", "must be at least 2");
  }
  if (const auto* fixed = std::get_if<FixedSchedule>(&schedule)) {
    if (fixed->iterations < 2 || fixed->batch < 1) {
      throw ConfigError("mc", "fixed schedules need iterations >= 2 and batch >= 1");
    }
  } else {
    const auto& adaptive = std::get<AdaptiveSchedule>(schedule);
    if (adaptive.eps < 0.0 || adaptive.batch < 1 || adaptive.max_iterations < 2) {
      throw ConfigError("mc", "adaptive schedules need eps >= 0, batch >= 1 and max_iterations >= 2");
    }
  }
}

std::string target_kind_name(TargetKind kind) {
  switch (kind) {
    case TargetKind::kGibbs:
      return "gibbs";
    case TargetKind::kFittedIs:
      return "fitted-is";
    case TargetKind::kFittedWis:
      return "fitted-wis";
    case TargetKind::kSoftmaxFile:
      return "softmax-file";
  }
  throw std::invalid_argument("target_kind_name: unknown kind");
}

nlohmann::json to_json(const RunConfig& config) {
  nlohmann::json dataset;
  if (config.dataset.kind == DatasetSpec::Kind::kSynthetic) {
    const auto& g = config.dataset.generator;
    dataset = {{"kind", "synthetic"},
               {"dimension", g.dimension},
               {"informative_dims", g.informative_dims},
               {"num_classes", g.num_classes},
               {"class_separation", g.class_separation},
               {"noise_scale", g.noise_scale}};
  } else {
    dataset = {{"kind", "csv"},
               {"path", config.dataset.csv_path.string()},
               {"label_column", config.dataset.schema.label_column},
               {"has_header", config.dataset.schema.has_header},
               {"logged_fraction", config.dataset.logged_fraction}};
  }
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& target : config.targets) {
    nlohmann::json entry = {{"name", target.name}, {"kind", target_kind_name(target.kind)}, {"tau", target.tau}};
    switch (target.kind) {
      case TargetKind::kGibbs:
        entry["faulty"] = target.faulty;
        break;
      case TargetKind::kFittedIs:
      case TargetKind::kFittedWis:
        entry["steps"] = target.steps;
        entry["step_size"] = target.step_size;
        break;
      case TargetKind::kSoftmaxFile:
        entry["file"] = target.file.string();
        break;
    }
    targets.push_back(std::move(entry));
  }
  nlohmann::json methods = nlohmann::json::array();
  for (const Method method : config.methods) {
    methods.push_back(method_name(method));
  }
  nlohmann::json mc;
  if (const auto* fixed = std::get_if<FixedSchedule>(&config.schedule)) {
    mc = {{"schedule", "fixed"}, {"iterations", fixed->iterations}, {"batch", fixed->batch}};
  } else {
    const auto& adaptive = std::get<AdaptiveSchedule>(config.schedule);
    mc = {{"schedule", "adaptive"},
          {"eps", adaptive.eps},
          {"x", adaptive.x},
          {"batch", adaptive.batch},
          {"max_iterations", adaptive.max_iterations}};
  }
  nlohmann::json document = {
      {"seed", config.seed},
      {"trials", config.trials},
      {"sizes", config.sizes},
      {"test_size", config.test_size},
      {"coverage_deltas", config.coverage_deltas},
      {"methods", std::move(methods)},
      {"eta_split", config.eta_split},
      {"reward_folds", config.reward_folds},
      {"out", config.out.string()},
      {"dataset", std::move(dataset)},
      {"behavior", {{"tau", config.behavior.tau}, {"faulty", config.behavior.faulty}}},
      {"targets", std::move(targets)},
      {"mc", std::move(mc)},
  };
  if (config.delta) {
    document["delta"] = *config.delta;
  }
  return document;
}

nlohmann::json toml_to_json(const std::string& text, const std::string& source_name) {
  try {
    const toml::table table = toml::parse(text, source_name);
    return toml_node_to_json(table);
  } catch (const toml::parse_error& error) {
    std::ostringstream message;
    message << error.description() << " at line " << error.source().begin.line << ", column "
            << error.source().begin.column;
    throw ConfigError("(document)", message.str());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream input(path);
  if (!input) {
    throw ConfigError("(document)", "cannot open '" + path.string() + "'");
  }
  std::stringstream buffer;
  buffer << input.rdbuf();
  if (path.extension() == ".json") {
    nlohmann::json document;
    try {
      document = nlohmann::json::parse(buffer.str());
    } catch (const nlohmann::json::parse_error& error) {
      throw ConfigError("(document)", error.what());
    }
    return config_from_json(document);
  }
  return config_from_json(toml_to_json(buffer.str(), path.string()));
}

SeedResolution apply_overrides(RunConfig& config, const ConfigOverrides& overrides, const char* env_seed) {
  SeedResolution resolution{config.seed, "config"};
  if (env_seed != nullptr && *env_seed != '\0') {
    const std::string_view text(env_seed);
    std::uint64_t value = 0;
    const auto [ptr, error] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (error != std::errc() || ptr != text.data() + text.size()) {
      throw ConfigError("OPE_SEED", "expected a non-negative integer");
    }
    resolution = {value, "env"};
  }
  if (overrides.seed) {
    resolution = {*overrides.seed, "flag"};
  }
  config.seed = resolution.seed;
  if (overrides.out) {
    config.out = *overrides.out;
  }
  if (!overrides.methods.empty()) {
    config.methods = overrides.methods;
  }
  if (overrides.delta) {
    config.delta = *overrides.delta;
  }
  if (overrides.trials) {
    config.trials = *overrides.trials;
  }
  if (overrides.eta_split) {
    config.eta_split = *overrides.eta_split;
  }
  if (overrides.mc_adaptive_eps) {
    AdaptiveSchedule adaptive;
    if (const auto* current = std::get_if<AdaptiveSchedule>(&config.schedule)) {
      adaptive = *current;
    }
    adaptive.eps = *overrides.mc_adaptive_eps;
    config.schedule = adaptive;
  } else if (overrides.mc_iterations) {
    FixedSchedule fixed;
    if (const auto* current = std::get_if<FixedSchedule>(&config.schedule)) {
      fixed = *current;
    }
    fixed.iterations = *overrides.mc_iterations;
    config.schedule = fixed;
  }
  config.validate();
  return resolution;
}

}  // namespace ope
