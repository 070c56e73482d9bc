#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>

#include "rieszdml/dataset.hpp"
#include "rieszdml/error.hpp"

namespace rieszdml {

/// A column named by the caller does not appear in the CSV header.
class MissingColumnError : public InvalidArgument {
 public:
  explicit MissingColumnError(std::string column)
      : InvalidArgument("csv: no column named '" + column + "'"), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

struct CsvColumns {
  std::string outcome;
  std::optional<std::string> treatment;
};

/// Reads a comma separated file whose first row is a header. The outcome
/// column is taken by name; every other column becomes a covariate, in header
/// order. Any cell that is not a finite number is a ParseError.
Dataset read_csv_dataset(std::istream& in, const CsvColumns& columns);
Dataset read_csv_dataset(const std::filesystem::path& path, const CsvColumns& columns);

}  // namespace rieszdml
