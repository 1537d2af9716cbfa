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

#include <ope/data.hpp>
#include <ope/random.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace ope {

void ClassificationDataset::validate() const {
  if (features.rows() != size()) {
    throw std::invalid_argument("classification dataset: features and labels differ in length");
  }
  if (num_classes < 1) {
    throw std::invalid_argument("classification dataset: num_classes must be positive");
  }
  for (const int label : labels) {
    if (label < 1 || label > num_classes) {
      throw std::invalid_argument("classification dataset: label out of range");
    }
  }
  if (!features.allFinite()) {
    throw std::invalid_argument("classification dataset: non-finite feature");
  }
}

ClassificationDataset ClassificationDataset::subset(std::span<const Eigen::Index> indices) const {
  ClassificationDataset out;
  out.num_classes = num_classes;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const Eigen::Index i = indices[r];
    if (i < 0 || i >= size()) {
      throw std::out_of_range("classification dataset: subset index out of range");
    }
    out.features.row(static_cast<Eigen::Index>(r)) = features.row(i);
    out.labels.push_back(labels[static_cast<std::size_t>(i)]);
  }
  return out;
}

void GeneratorConfig::validate() const {
  if (n < 1) {
    throw std::invalid_argument("generator: n must be positive");
  }
  if (num_classes < 2) {
    throw std::invalid_argument("generator: at least two classes are required");
  }
  if (informative_dims < 1 || informative_dims > dimension) {
    throw std::invalid_argument("generator: informative_dims must lie in [1, dimension]");
  }
  if (!(class_separation > 0.0) || !std::isfinite(class_separation)) {
    throw std::invalid_argument("generator: class_separation must be positive");
  }
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    throw std::invalid_argument("generator: noise_scale must be non-negative");
  }
  if (informative_dims < 63 && static_cast<std::uint64_t>(num_classes) > (std::uint64_t{1} << informative_dims)) {
    throw std::invalid_argument("generator: num_classes exceeds the 2^informative_dims hypercube vertices");
  }
}

Eigen::MatrixXd class_centroids(const GeneratorConfig& config) {
  config.validate();
  const int m = config.informative_dims;
  std::mt19937_64 engine(derive_seed(config.problem_seed, {1}));
  std::bernoulli_distribution coin(0.5);
  std::set<std::vector<bool>> used;
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(config.num_classes, config.dimension);
  for (int k = 0; k < config.num_classes; ++k) {
    std::vector<bool> vertex(static_cast<std::size_t>(m));
    do {
      for (int j = 0; j < m; ++j) {
        vertex[static_cast<std::size_t>(j)] = coin(engine);
      }
    } while (!used.insert(vertex).second);
    for (int j = 0; j < m; ++j) {
      centroids(k, j) = vertex[static_cast<std::size_t>(j)] ? config.class_separation : -config.class_separation;
    }
  }
  return centroids;
}

ClassificationDataset generate_classification(const GeneratorConfig& config) {
  const Eigen::MatrixXd centroids = class_centroids(config);
  std::mt19937_64 label_engine(derive_seed(config.seed, {2}));
  std::mt19937_64 noise_engine(derive_seed(config.seed, {3}));
  std::uniform_int_distribution<int> label_draw(1, config.num_classes);
  std::normal_distribution<double> noise(0.0, 1.0);

  ClassificationDataset out;
  out.num_classes = config.num_classes;
  out.labels.resize(static_cast<std::size_t>(config.n));
  out.features.resize(config.n, config.dimension);
  for (Eigen::Index i = 0; i < config.n; ++i) {
    const int label = label_draw(label_engine);
    out.labels[static_cast<std::size_t>(i)] = label;
    for (Eigen::Index j = 0; j < config.dimension; ++j) {
      out.features(i, j) = centroids(label - 1, j) + config.noise_scale * noise(noise_engine);
    }
  }
  return out;
}

CsvError::CsvError(const std::string& message, std::size_t row, std::size_t column)
    : std::runtime_error("csv: " + message + " (row " + std::to_string(row) + ", column " + std::to_string(column) +
                         ")"),
      row_(row),
      column_(column) {}

namespace {

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = text.find_last_not_of(" \t\r");
  std::string_view out = text.substr(first, last - first + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return std::string(out);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                           : comma - start)));
    if (comma == std::string::npos) {
      return fields;
    }
    start = comma + 1;
  }
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

ClassificationDataset read_csv(std::istream& input, const CsvSchema& schema) {
  std::string line;
  std::size_t line_number = 0;
  std::size_t columns = 0;
  std::size_t label_index = 0;
  bool label_resolved = false;

  auto resolve_without_header = [&](std::size_t width) {
    if (schema.label_column.empty()) {
      label_index = width - 1;
    } else {
      std::size_t index = 0;
      const auto* begin = schema.label_column.data();
      const auto* end = begin + schema.label_column.size();
      if (std::from_chars(begin, end, index).ptr != end || index >= width) {
        throw CsvError("label column '" + schema.label_column + "' is not a valid column index", 0, 0);
      }
      label_index = index;
    }
    label_resolved = true;
  };

  if (schema.has_header) {
    while (std::getline(input, line)) {
      ++line_number;
      if (!blank(line)) {
        break;
      }
    }
    if (blank(line)) {
      throw CsvError("empty dataset", line_number, 0);
    }
    const auto names = split_fields(line);
    columns = names.size();
    if (schema.label_column.empty()) {
      label_index = columns - 1;
    } else {
      const auto it = std::find(names.begin(), names.end(), schema.label_column);
      if (it == names.end()) {
        throw CsvError("label column '" + schema.label_column + "' not found in header", line_number, 0);
      }
      label_index = static_cast<std::size_t>(it - names.begin());
    }
    label_resolved = true;
    if (columns < 2) {
      throw CsvError("at least one feature column is required", line_number, 0);
    }
  }

  std::vector<double> values;
  std::vector<int> labels;
  std::map<std::string, int> codes;
  while (std::getline(input, line)) {
    ++line_number;
    if (blank(line)) {
      continue;
    }
    const auto fields = split_fields(line);
    if (!label_resolved) {
      columns = fields.size();
      if (columns < 2) {
        throw CsvError("at least one feature column is required", line_number, 0);
      }
      resolve_without_header(columns);
    }
    if (fields.size() != columns) {
      throw CsvError("expected " + std::to_string(columns) + " fields, found " + std::to_string(fields.size()),
                     line_number, 0);
    }
    for (std::size_t c = 0; c < columns; ++c) {
      const std::string& cell = fields[c];
      if (c == label_index) {
        if (cell.empty()) {
          throw CsvError("missing label", line_number, c + 1);
        }
        const auto [it, inserted] = codes.try_emplace(cell, static_cast<int>(codes.size()) + 1);
        labels.push_back(it->second);
        continue;
      }
      double value = 0.0;
      const auto* begin = cell.data();
      const auto* end = begin + cell.size();
      const auto [ptr, error] = std::from_chars(begin, end, value);
      if (cell.empty() || error != std::errc() || ptr != end || !std::isfinite(value)) {
        throw CsvError("non-numeric feature '" + cell + "'", line_number, c + 1);
      }
      values.push_back(value);
    }
  }
  if (labels.empty()) {
    throw CsvError("empty dataset", line_number, 0);
  }

  ClassificationDataset out;
  out.num_classes = static_cast<int>(codes.size());
  out.labels = std::move(labels);
  const auto rows = static_cast<Eigen::Index>(out.labels.size());
  const auto width = static_cast<Eigen::Index>(columns - 1);
  out.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), rows, width);
  return out;
}

ClassificationDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream input(path);
  if (!input) {
    throw CsvError("cannot open '" + path.string() + "'", 0, 0);
  }
  return read_csv(input, schema);
}

std::string to_csv(const ClassificationDataset& dataset) {
  dataset.validate();
  std::string out;
  for (Eigen::Index j = 0; j < dataset.dimension(); ++j) {
    out += "x" + std::to_string(j + 1) + ",";
  }
  out += "label\n";
  char buffer[64];
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    for (Eigen::Index j = 0; j < dataset.dimension(); ++j) {
      const auto result = std::to_chars(buffer, buffer + sizeof(buffer), dataset.features(i, j));
      out.append(buffer, result.ptr);
      out += ',';
    }
    out += std::to_string(dataset.labels[static_cast<std::size_t>(i)]);
    out += '\n';
  }
  return out;
}

LoggedDataset log_interactions(const ClassificationDataset& dataset, const PolicyTable& behavior, std::uint64_t seed) {
  dataset.validate();
  if (behavior.rows() != dataset.size()) {
    throw std::invalid_argument("log_interactions: behavior table does not match the dataset");
  }
  if (behavior.num_actions() < dataset.num_classes) {
    throw std::invalid_argument("log_interactions: fewer actions than classes");
  }
  const CounterStream stream(derive_seed(seed, {4}));
  const int k = behavior.num_actions();
  std::vector<int> actions(static_cast<std::size_t>(dataset.size()));
  Eigen::VectorXd rewards(dataset.size());
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    const double u = stream.uniform(static_cast<std::uint64_t>(i));
    double cumulative = 0.0;
    int action = k;
    for (int a = 1; a <= k; ++a) {
      cumulative += behavior.at(i, a);
      if (u < cumulative) {
        action = a;
        break;
      }
    }
    // Round-off in the last cumulative sum must not land on a zero-probability action.
    while (behavior.at(i, action) <= 0.0 && action > 1) {
      --action;
    }
    actions[static_cast<std::size_t>(i)] = action;
    rewards[i] = action == dataset.labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  }
  return LoggedDataset(dataset.features, std::move(actions), std::move(rewards), behavior);
}

std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> split_indices(
    Eigen::Index n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split: train_fraction must lie in (0, 1)");
  }
  const auto train_size = static_cast<Eigen::Index>(std::llround(train_fraction * static_cast<double>(n)));
  if (train_size < 1 || train_size >= n) {
    throw std::invalid_argument("split: both parts must be nonempty");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 engine(derive_seed(seed, {5}));
  std::shuffle(order.begin(), order.end(), engine);
  std::vector<Eigen::Index> train(order.begin(), order.begin() + train_size);
  std::vector<Eigen::Index> test(order.begin() + train_size, order.end());
  return {std::move(train), std::move(test)};
}

std::pair<ClassificationDataset, ClassificationDataset> split(
    const ClassificationDataset& dataset, double train_fraction, std::uint64_t seed) {
  const auto [train, test] = split_indices(dataset.size(), train_fraction, seed);
  return {dataset.subset(train), dataset.subset(test)};
}

}  // namespace ope
