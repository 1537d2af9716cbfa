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

#ifndef OPE_REPORT_HPP
#define OPE_REPORT_HPP

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ope {

enum class BiasKind { kMultiplicative, kAdditive };

/// A lower bound on a policy value split into its constituent terms.
///
/// Additive methods satisfy lower_bound = point_estimate - concentration - bias - context_term.
/// Multiplicative methods (ESLB, Chebyshev-WIS) scale the clipped estimate by `bias` instead.
/// A vacuous bound that cannot certify anything carries lower_bound = -infinity.
struct BoundReport {
  std::string method;
  double point_estimate = 0.0;
  double concentration = 0.0;
  double bias = 0.0;
  BiasKind bias_kind = BiasKind::kAdditive;
  double context_term = 0.0;
  double lower_bound = 0.0;
  double delta = 0.0;
  double x = 0.0;
  std::int64_t iterations = 0;
  std::map<std::string, double> diagnostics;

  /// True when the bound is at most zero and says nothing about a [0, 1] value.
  [[nodiscard]] bool vacuous() const noexcept { return !(lower_bound > 0.0); }
};

/// Doubles that are not finite are written as the strings "inf", "-inf" or "nan".
nlohmann::json number_to_json(double value);
double number_from_json(const nlohmann::json& value);

nlohmann::json to_json(const BoundReport& report);
BoundReport bound_report_from_json(const nlohmann::json& document);

/// Fixed-point text with `precision` decimals; -inf renders as "−∞".
std::string format_cell(double value, int precision = 3);

/// A simple row-major table that renders to CSV or GitHub Markdown.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::string to_csv() const;
  [[nodiscard]] std::string to_markdown() const;
};

/// One row per report with the decomposition columns (estimate, concentration, bias, context term, bound).
Table decomposition_table(const std::vector<std::pair<std::string, BoundReport>>& labelled_reports);

/// Writes to a sibling temporary file and renames it over `path`, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace ope

#endif
