#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rieszdml/dataset.hpp"
#include "rieszdml/dictionary.hpp"
#include "rieszdml/functional.hpp"
#include "rieszdml/rmd.hpp"

namespace rieszdml {

/// Evaluation rows and nuisance-training rows of one cross-fitting step.
/// The two sets are disjoint by construction; overlapping sets are rejected.
class CrossFitSplit {
 public:
  CrossFitSplit(std::vector<std::size_t> eval_rows, std::vector<std::size_t> train_rows);

  std::span<const std::size_t> eval_rows() const noexcept { return eval_; }
  std::span<const std::size_t> train_rows() const noexcept { return train_; }

 private:
  std::vector<std::size_t> eval_;
  std::vector<std::size_t> train_;
};

/// Partition of {0, ..., n-1} into K >= 2 non-empty folds whose sizes differ by
/// at most one. Fold ids are 0-based.
class FoldPlan {
 public:
  /// Shuffles the rows with a generator seeded by `seed`, then deals them
  /// round-robin into K folds.
  static FoldPlan random(std::size_t n, std::size_t folds, std::uint64_t seed);
  static FoldPlan from_assignments(std::vector<std::size_t> assignments, std::size_t folds);

  std::size_t folds() const noexcept { return folds_; }
  std::size_t size() const noexcept { return assignments_.size(); }
  const std::vector<std::size_t>& assignments() const noexcept { return assignments_; }

  /// Rows of fold k in increasing order.
  std::vector<std::size_t> fold_rows(std::size_t k) const;
  /// Fold k for evaluation, its complement for training.
  CrossFitSplit split(std::size_t k) const;

 private:
  FoldPlan(std::vector<std::size_t> assignments, std::size_t folds);
  std::vector<std::size_t> assignments_;
  std::size_t folds_;
};

struct Observation {
  double y = 0.0;
  Eigen::VectorXd x;
};

/// psi(W, theta; beta, rho) = theta - m(X, b)'beta - rho'b(X) (Y - b(X)'beta).
double score_psi(const Observation& w, double theta, const Eigen::Ref<const Eigen::VectorXd>& beta,
                 const Eigen::Ref<const Eigen::VectorXd>& rho, const Dictionary& dict, const Functional& f);

struct ScoreDerivatives {
  /// d psi / d beta = -m(X, b) + b(X) b(X)'rho
  Eigen::VectorXd d_beta;
  /// d psi / d rho = -b(X) (Y - b(X)'beta)
  Eigen::VectorXd d_rho;
};

ScoreDerivatives score_derivatives(const Observation& w, double theta,
                                   const Eigen::Ref<const Eigen::VectorXd>& beta,
                                   const Eigen::Ref<const Eigen::VectorXd>& rho, const Dictionary& dict,
                                   const Functional& f);

/// Root of E_fold psi(W, theta; beta, rho) = 0, i.e.
/// E_fold[m(X, b)'beta + rho'b(X) (Y - b(X)'beta)].
double fold_theta(const Dataset& data, std::span<const std::size_t> rows,
                  const Eigen::Ref<const Eigen::VectorXd>& beta, const Eigen::Ref<const Eigen::VectorXd>& rho,
                  const Dictionary& dict, const Functional& f);

struct OrthogonalityReport {
  /// ||E_n d psi / d beta||_inf
  double d_beta_sup = 0.0;
  /// ||E_n d psi / d rho||_inf
  double d_rho_sup = 0.0;
  /// Both sup-norms are within 3x the lambda of the corresponding fit
  /// (Riesz lambda for d_beta, regression lambda for d_rho).
  bool within_bounds = true;
};

/// Averaged score derivatives over `rows`. Pass the lambdas used for the
/// fits to get the bound check; with the defaults it is skipped.
OrthogonalityReport orthogonality_report(const Dataset& data, std::span<const std::size_t> rows,
                                         const Dictionary& dict, const Functional& f,
                                         const Eigen::Ref<const Eigen::VectorXd>& beta,
                                         const Eigen::Ref<const Eigen::VectorXd>& rho,
                                         double lambda_blp = std::numeric_limits<double>::infinity(),
                                         double lambda_riesz = std::numeric_limits<double>::infinity());

struct DmlOptions {
  std::size_t folds = 5;
  double alpha = 0.05;
  LambdaRule blp_rule;
  LambdaRule riesz_rule;
  double l1_bound = kNoL1Bound;
  RmdOptions solver;
  std::uint64_t seed = 0;
  /// Workers for the per-fold pipelines.
  std::size_t threads = 1;
  /// When false the Riesz representer is fixed at zero, giving the plain
  /// plug-in estimator. Only useful as a baseline.
  bool riesz_correction = true;
};

struct FoldFit {
  std::size_t fold = 0;
  std::size_t eval_size = 0;
  double theta = 0.0;
  NuisanceFit blp;
  NuisanceFit riesz;
};

enum class DmlStatus { ok, degenerate_variance };

const char* to_string(DmlStatus s) noexcept;

struct DmlResult {
  double theta_hat = 0.0;
  double sigma_hat = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double alpha = 0.05;
  std::size_t n = 0;
  std::size_t folds = 0;
  std::vector<double> per_fold_theta;
  std::vector<FoldFit> per_fold;
  /// Cross-fitted: each observation uses the nuisances fitted without its fold.
  OrthogonalityReport orthogonality;
  /// Largest lambda over the folds.
  double lambda_blp = 0.0;
  double lambda_riesz = 0.0;
  DmlStatus status = DmlStatus::ok;
  std::vector<std::string> warnings;
};

/// Cross-fitted debiased estimate with a fold plan drawn from opts.seed.
DmlResult dml_estimate(const Dataset& data, const Dictionary& dict, const Functional& f, const DmlOptions& opts);

/// Same with an explicit fold plan (opts.folds and opts.seed are ignored).
DmlResult dml_estimate(const Dataset& data, const Dictionary& dict, const Functional& f, const FoldPlan& plan,
                       const DmlOptions& opts);

}  // namespace rieszdml
