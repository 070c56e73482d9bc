#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rieszdml {

/// An i.i.d. sample of an outcome Y and covariates X (one row per
/// observation). Immutable after construction.
///
/// Invariants checked by the constructor: n >= 2, every entry finite,
/// and, when a treatment column is designated, that column is 0/1 valued.
class Dataset {
 public:
  Dataset(Eigen::VectorXd outcome, Eigen::MatrixXd covariates,
          std::optional<std::size_t> treatment_col = std::nullopt,
          std::vector<std::string> covariate_names = {});

  std::size_t size() const noexcept { return static_cast<std::size_t>(outcome_.size()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(covariates_.cols()); }

  const Eigen::VectorXd& outcome() const noexcept { return outcome_; }
  const Eigen::MatrixXd& covariates() const noexcept { return covariates_; }
  std::optional<std::size_t> treatment_col() const noexcept { return treatment_col_; }
  const std::vector<std::string>& covariate_names() const noexcept { return names_; }

  double y(std::size_t i) const { return outcome_(static_cast<Eigen::Index>(i)); }
  Eigen::VectorXd x(std::size_t i) const {
    return covariates_.row(static_cast<Eigen::Index>(i)).transpose();
  }

  /// Rows reordered so that row i of the result is row perm[i] of *this.
  Dataset permuted(std::span<const std::size_t> perm) const;

  /// Covariates rescaled to unit sample variance (the treatment column and
  /// zero-variance columns are left untouched).
  Dataset standardized() const;

 private:
  Eigen::VectorXd outcome_;
  Eigen::MatrixXd covariates_;
  std::optional<std::size_t> treatment_col_;
  std::vector<std::string> names_;
};

/// 0, 1, ..., n-1.
std::vector<std::size_t> all_rows(std::size_t n);

}  // namespace rieszdml
