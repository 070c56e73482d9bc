#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "rieszdml/dataset.hpp"
#include "rieszdml/dictionary.hpp"
#include "rieszdml/functional.hpp"
#include "rieszdml/simplex.hpp"

namespace rieszdml {

inline constexpr double kNoL1Bound = std::numeric_limits<double>::infinity();

/// Regularized minimum distance program
///
///     minimize ||t||_1  subject to  ||G t - M||_inf <= lambda,  ||t||_1 <= B.
///
/// The residual convention is G t - M; B = +inf drops the l1 constraint.
/// The Gram matrix is symmetrized on construction.
class RmdProblem {
 public:
  RmdProblem(Eigen::MatrixXd gram, Eigen::VectorXd moments, double lambda,
             double l1_bound = kNoL1Bound);

  const Eigen::MatrixXd& gram() const noexcept { return gram_; }
  const Eigen::VectorXd& moments() const noexcept { return moments_; }
  double lambda() const noexcept { return lambda_; }
  double l1_bound() const noexcept { return l1_bound_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(moments_.size()); }

  /// ||G t - M||_inf, computed directly.
  double max_residual(const Eigen::Ref<const Eigen::VectorXd>& t) const;

 private:
  Eigen::MatrixXd gram_;
  Eigen::VectorXd moments_;
  double lambda_;
  double l1_bound_;
};

enum class RmdStatus { optimal, infeasible, iteration_limit };

const char* to_string(RmdStatus s) noexcept;

struct RmdSolution {
  Eigen::VectorXd t;
  double l1_norm = 0.0;
  double max_residual = 0.0;
  RmdStatus status = RmdStatus::iteration_limit;
  std::size_t iterations = 0;
};

struct RmdOptions {
  std::size_t max_iters = 100000;
  lp::PivotRule pivot_rule = lp::PivotRule::bland;
  /// Slack allowed when post-checking feasibility of an optimal solution.
  double feas_tol = 1e-7;
};

/// Solves the program through its linear-programming form t = t+ - t-.
/// An optimal status is only reported after the constraints have been
/// re-verified with a direct matrix-vector product.
RmdSolution solve_rmd(const RmdProblem& problem, const RmdOptions& opts = {});

/// How the sup-norm slack lambda is chosen for a fit on |A| observations
/// with a p-term dictionary.
class LambdaRule {
 public:
  struct Fixed {
    double value = 0.0;
  };
  /// lambda = c * Phi^{-1}(1 - alpha / (2p)) / sqrt(|A|).
  struct GaussianQuantile {
    double c = 1.1;
    double alpha = 0.05;
  };

  LambdaRule() : LambdaRule(GaussianQuantile{}) {}
  static LambdaRule fixed(double value) { return LambdaRule(Fixed{value}); }
  static LambdaRule gaussian_quantile(double c, double alpha) {
    return LambdaRule(GaussianQuantile{c, alpha});
  }

  double value(std::size_t p, std::size_t sample_size) const;
  const std::variant<Fixed, GaussianQuantile>& method() const noexcept { return method_; }
  /// Returns a rule whose lambda is `factor` times this one's.
  LambdaRule scaled(double factor) const;

 private:
  explicit LambdaRule(std::variant<Fixed, GaussianQuantile> m);
  std::variant<Fixed, GaussianQuantile> method_;
  double scale_ = 1.0;
};

/// A nuisance coefficient vector together with the program that produced it.
struct NuisanceFit {
  Eigen::VectorXd coef;
  RmdSolution solution;
  double lambda = 0.0;
  std::size_t sample_size = 0;
};

/// G = E_A b b', M = E_A Y b, from a design matrix whose rows are b(X_i).
RmdProblem blp_problem(const Eigen::Ref<const Eigen::MatrixXd>& design,
                       const Eigen::Ref<const Eigen::VectorXd>& outcome, double lambda,
                       double l1_bound = kNoL1Bound);

/// G = E_A b b', M = E_A m(X, b), from the design matrix and the matrix whose
/// rows are m(X_i, b).
RmdProblem riesz_problem(const Eigen::Ref<const Eigen::MatrixXd>& design,
                         const Eigen::Ref<const Eigen::MatrixXd>& m_rows, double lambda,
                         double l1_bound = kNoL1Bound);

/// Sparse best linear predictor of Y on b(X) from the rows in A.
NuisanceFit estimate_blp(const Dataset& data, std::span<const std::size_t> rows, const Dictionary& dict,
                         const LambdaRule& rule, double l1_bound = kNoL1Bound, const RmdOptions& opts = {});

/// Sparse Riesz representer of the functional from the rows in A.
NuisanceFit estimate_riesz(const Dataset& data, std::span<const std::size_t> rows, const Dictionary& dict,
                           const Functional& f, const LambdaRule& rule, double l1_bound = kNoL1Bound,
                           const RmdOptions& opts = {});

}  // namespace rieszdml
