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

#ifndef OPE_DATA_HPP
#define OPE_DATA_HPP

#include <ope/core.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ope {

/// Features with integer labels in 1..num_classes.
struct ClassificationDataset {
  Eigen::MatrixXd features;
  std::vector<int> labels;
  int num_classes = 0;

  [[nodiscard]] Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(labels.size()); }
  [[nodiscard]] Eigen::Index dimension() const noexcept { return features.cols(); }

  /// Throws `std::invalid_argument` on out-of-range labels, shape mismatch or non-finite features.
  void validate() const;

  [[nodiscard]] ClassificationDataset subset(std::span<const Eigen::Index> indices) const;
};

/// Gaussian blobs around distinct vertices of a scaled hypercube in the first `informative_dims`
/// coordinates. Remaining coordinates carry pure noise.
struct GeneratorConfig {
  Eigen::Index n = 1000;
  Eigen::Index dimension = 20;
  int num_classes = 5;
  int informative_dims = 10;
  double class_separation = 2.0;
  double noise_scale = 1.0;
  std::uint64_t problem_seed = 0;  ///< Picks the centroids; datasets sharing it share the problem.
  std::uint64_t seed = 0;          ///< Draws labels and noise.

  void validate() const;
};

/// num_classes x dimension matrix of class centroids; coordinates are +-class_separation or 0.
Eigen::MatrixXd class_centroids(const GeneratorConfig& config);

ClassificationDataset generate_classification(const GeneratorConfig& config);

/// Parse failure with a 1-based file line and column (0 when not applicable).
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& message, std::size_t row, std::size_t column);

  [[nodiscard]] std::size_t row() const noexcept { return row_; }
  [[nodiscard]] std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

struct CsvSchema {
  /// Header name of the label column, or its 0-based index when the file has no header.
  /// Empty selects the last column.
  std::string label_column;
  bool has_header = true;
};

/// Numeric feature columns plus one label column. Labels are remapped to 1..K in order of first appearance.
ClassificationDataset read_csv(std::istream& input, const CsvSchema& schema);
ClassificationDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Header x1..xd,label; shortest round-trip formatting for features.
std::string to_csv(const ClassificationDataset& dataset);

/// Samples A_i from the behavior row i and sets R_i = 1{A_i = label_i}.
LoggedDataset log_interactions(const ClassificationDataset& dataset, const PolicyTable& behavior, std::uint64_t seed);

/// Seeded permutation split; the first part holds round(train_fraction * n) rows.
std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> split_indices(
    Eigen::Index n, double train_fraction, std::uint64_t seed);

std::pair<ClassificationDataset, ClassificationDataset> split(
    const ClassificationDataset& dataset, double train_fraction, std::uint64_t seed);

}  // namespace ope

#endif
