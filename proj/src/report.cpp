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

#include <ope/report.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ope {

nlohmann::json number_to_json(double value) {
  if (std::isnan(value)) {
    return "nan";
  }
  if (std::isinf(value)) {
    return value > 0 ? "inf" : "-inf";
  }
  return value;
}

double number_from_json(const nlohmann::json& value) {
  if (value.is_string()) {
    const auto text = value.get<std::string>();
    if (text == "inf") {
      return std::numeric_limits<double>::infinity();
    }
    if (text == "-inf") {
      return -std::numeric_limits<double>::infinity();
    }
    if (text == "nan") {
      return std::numeric_limits<double>::quiet_NaN();
    }
    throw std::invalid_argument("number_from_json: unexpected string '" + text + "'");
  }
  return value.get<double>();
}

nlohmann::json to_json(const BoundReport& report) {
  nlohmann::json diagnostics = nlohmann::json::object();
  for (const auto& [key, value] : report.diagnostics) {
    diagnostics[key] = number_to_json(value);
  }
  return {
      {"method", report.method},
      {"point_estimate", number_to_json(report.point_estimate)},
      {"concentration", number_to_json(report.concentration)},
      {"bias", number_to_json(report.bias)},
      {"bias_kind", report.bias_kind == BiasKind::kMultiplicative ? "multiplicative" : "additive"},
      {"context_term", number_to_json(report.context_term)},
      {"lower_bound", number_to_json(report.lower_bound)},
      {"vacuous", report.vacuous()},
      {"delta", number_to_json(report.delta)},
      {"x", number_to_json(report.x)},
      {"iterations", report.iterations},
      {"diagnostics", diagnostics},
  };
}

BoundReport bound_report_from_json(const nlohmann::json& document) {
  BoundReport report;
  report.method = document.at("method").get<std::string>();
  report.point_estimate = number_from_json(document.at("point_estimate"));
  report.concentration = number_from_json(document.at("concentration"));
  report.bias = number_from_json(document.at("bias"));
  report.bias_kind =
      document.value("bias_kind", "additive") == "multiplicative" ? BiasKind::kMultiplicative : BiasKind::kAdditive;
  report.context_term = number_from_json(document.at("context_term"));
  report.lower_bound = number_from_json(document.at("lower_bound"));
  report.delta = number_from_json(document.at("delta"));
  report.x = number_from_json(document.at("x"));
  report.iterations = document.value("iterations", std::int64_t{0});
  if (document.contains("diagnostics")) {
    for (const auto& [key, value] : document.at("diagnostics").items()) {
      report.diagnostics[key] = number_from_json(value);
    }
  }
  return report;
}

std::string format_cell(double value, int precision) {
  if (std::isinf(value)) {
    return value < 0 ? "−∞" : "∞";
  }
  if (std::isnan(value)) {
    return "nan";
  }
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << value;
  return out.str();
}

namespace {

std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) {
    return cell;
  }
  std::string escaped = "\"";
  for (const char c : cell) {
    if (c == '"') {
      escaped += '"';
    }
    escaped += c;
  }
  return escaped + "\"";
}

}  // namespace

std::string Table::to_csv() const {
  std::ostringstream out;
  auto write_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i == 0 ? "" : ",") << csv_escape(row[i]);
    }
    out << '\n';
  };
  write_row(header);
  for (const auto& row : rows) {
    write_row(row);
  }
  return out.str();
}

std::string Table::to_markdown() const {
  std::ostringstream out;
  auto write_row = [&out](const std::vector<std::string>& row) {
    out << '|';
    for (const auto& cell : row) {
      out << ' ' << cell << " |";
    }
    out << '\n';
  };
  write_row(header);
  out << '|';
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << "---|";
  }
  out << '\n';
  for (const auto& row : rows) {
    write_row(row);
  }
  return out.str();
}

Table decomposition_table(const std::vector<std::pair<std::string, BoundReport>>& labelled_reports) {
  Table table;
  table.header = {"target",       "method",      "estimate", "concentration", "bias", "bias_kind",
                  "context_term", "lower_bound", "status"};
  for (const auto& [label, report] : labelled_reports) {
    table.rows.push_back({
        label,
        report.method,
        format_cell(report.point_estimate, 4),
        format_cell(report.concentration, 4),
        format_cell(report.bias, 4),
        report.bias_kind == BiasKind::kMultiplicative ? "multiplicative" : "additive",
        format_cell(report.context_term, 4),
        format_cell(report.lower_bound, 4),
        report.delta == 0.0 ? "estimate" : (report.vacuous() ? "vacuous" : "certified"),
    });
  }
  return table;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path temporary = path;
  temporary += ".tmp";
  {
    std::ofstream output(temporary, std::ios::binary | std::ios::trunc);
    if (!output) {
      throw std::runtime_error("cannot write '" + temporary.string() + "'");
    }
    output.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!output.flush()) {
      throw std::runtime_error("failed writing '" + temporary.string() + "'");
    }
  }
  std::filesystem::rename(temporary, path);
}

}  // namespace ope
