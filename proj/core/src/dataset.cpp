#include "rieszdml/dataset.hpp"

#include <cmath>
#include <numeric>

#include "rieszdml/error.hpp"

namespace rieszdml {

Dataset::Dataset(Eigen::VectorXd outcome, Eigen::MatrixXd covariates,
                 std::optional<std::size_t> treatment_col,
                 std::vector<std::string> covariate_names)
    : outcome_(std::move(outcome)),
      covariates_(std::move(covariates)),
      treatment_col_(treatment_col),
      names_(std::move(covariate_names)) {
  if (outcome_.size() != covariates_.rows()) {
    throw DimensionError("dataset: outcome has " + std::to_string(outcome_.size()) +
                         " rows but covariates have " + std::to_string(covariates_.rows()));
  }
  if (outcome_.size() < 2) {
    throw InvalidArgument("dataset: need at least 2 observations");
  }
  if (covariates_.cols() < 1) {
    throw InvalidArgument("dataset: need at least one covariate");
  }
  if (!outcome_.allFinite() || !covariates_.allFinite()) {
    throw InvalidArgument("dataset: non-finite entry");
  }
  if (treatment_col_) {
    if (*treatment_col_ >= dim()) {
      throw DimensionError("dataset: treatment column out of range");
    }
    const auto col = covariates_.col(static_cast<Eigen::Index>(*treatment_col_));
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      if (col(i) != 0.0 && col(i) != 1.0) {
        throw InvalidArgument("dataset: treatment column must contain only 0 or 1 (row " +
                              std::to_string(i) + ")");
      }
    }
  }
  if (names_.empty()) {
    for (std::size_t j = 0; j < dim(); ++j) names_.push_back("x" + std::to_string(j + 1));
  } else if (names_.size() != dim()) {
    throw DimensionError("dataset: covariate name count does not match column count");
  }
}

Dataset Dataset::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != size()) throw DimensionError("dataset: permutation length mismatch");
  Eigen::VectorXd y(outcome_.size());
  Eigen::MatrixXd x(covariates_.rows(), covariates_.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (perm[i] >= size()) throw DimensionError("dataset: permutation index out of range");
    const auto src = static_cast<Eigen::Index>(perm[i]);
    const auto dst = static_cast<Eigen::Index>(i);
    y(dst) = outcome_(src);
    x.row(dst) = covariates_.row(src);
  }
  return Dataset(std::move(y), std::move(x), treatment_col_, names_);
}

Dataset Dataset::standardized() const {
  Eigen::MatrixXd x = covariates_;
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (treatment_col_ && static_cast<std::size_t>(j) == *treatment_col_) continue;
    const double mean = x.col(j).mean();
    const double var = (x.col(j).array() - mean).square().sum() / (n - 1.0);
    if (var > 0.0) x.col(j) /= std::sqrt(var);
  }
  return Dataset(outcome_, std::move(x), treatment_col_, names_);
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace rieszdml
