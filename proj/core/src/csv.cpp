#include "rieszdml/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>
#include <vector>

namespace rieszdml {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      return cells;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

double parse_cell(std::string_view cell, std::size_t line_no, std::string_view column) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError("csv: line " + std::to_string(line_no) + ", column '" + std::string(column) +
                     "': not a finite number: '" + std::string(cell) + "'");
  }
  return value;
}

}  // namespace

Dataset read_csv_dataset(std::istream& in, const CsvColumns& columns) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("csv: empty input");
  std::vector<std::string> header;
  for (auto cell : split(line)) header.emplace_back(cell);

  std::optional<std::size_t> outcome_idx;
  std::optional<std::size_t> treatment_idx;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == columns.outcome) outcome_idx = j;
    if (columns.treatment && header[j] == *columns.treatment) treatment_idx = j;
  }
  if (!outcome_idx) throw MissingColumnError(columns.outcome);
  if (columns.treatment && !treatment_idx) throw MissingColumnError(*columns.treatment);
  if (columns.treatment && *treatment_idx == *outcome_idx) {
    throw InvalidArgument("csv: treatment column cannot be the outcome column");
  }

  std::vector<std::string> names;
  std::optional<std::size_t> treatment_cov;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j == *outcome_idx) continue;
    if (treatment_idx && j == *treatment_idx) treatment_cov = names.size();
    names.push_back(header[j]);
  }

  std::vector<double> ys;
  std::vector<double> xs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ParseError("csv: line " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " cells, header has " +
                       std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const double v = parse_cell(cells[j], line_no, header[j]);
      if (j == *outcome_idx) {
        ys.push_back(v);
      } else {
        xs.push_back(v);
      }
    }
  }

  const auto n = static_cast<Eigen::Index>(ys.size());
  const auto d = static_cast<Eigen::Index>(names.size());
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  Eigen::MatrixXd x = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      xs.data(), n, d);
  return Dataset(std::move(y), std::move(x), treatment_cov, std::move(names));
}

Dataset read_csv_dataset(const std::filesystem::path& path, const CsvColumns& columns) {
  std::ifstream in(path);
  if (!in) throw ParseError("csv: cannot open " + path.string());
  return read_csv_dataset(in, columns);
}

}  // namespace rieszdml
