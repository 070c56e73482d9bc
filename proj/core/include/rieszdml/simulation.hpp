#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rieszdml/dataset.hpp"
#include "rieszdml/dictionary.hpp"
#include "rieszdml/dml.hpp"
#include "rieszdml/functional.hpp"

namespace rieszdml {

enum class CovariateLaw { standard_normal, uniform };

const char* to_string(CovariateLaw law) noexcept;

/// Y = b(X)'beta_star + noise, X with i.i.d. coordinates.
struct SparseLinearDgp {
  Dictionary dict;
  Eigen::VectorXd beta_star;
  CovariateLaw x_dist = CovariateLaw::standard_normal;
  double noise_sd = 1.0;
};

/// X = (D, Z) with Z ~ N(0, I), D | Z ~ Bernoulli(pi(Z)) where
/// pi(z) = logistic(propensity_intercept + z'propensity_coefs) clipped to
/// [0.05, 0.95], and
/// Y = tau * D + Z'outcome_coefs + noise. The treatment is covariate 0.
struct AteLogisticDgp {
  Eigen::VectorXd outcome_coefs;
  double tau = 1.0;
  Eigen::VectorXd propensity_coefs;
  double noise_sd = 1.0;
  double propensity_intercept = 0.0;
};

/// Y = b(X)'beta + noise with every coefficient active:
/// beta_j = scale * j^(-decay_rate), j = 1..p.
struct DenseDecayDgp {
  Dictionary dict;
  double decay_rate = 1.0;
  double noise_sd = 1.0;
  CovariateLaw x_dist = CovariateLaw::standard_normal;
  double scale = 1.0;
};

inline constexpr double kPropensityFloor = 0.05;
inline constexpr double kPropensityCeiling = 0.95;

class Dgp {
 public:
  using Variant = std::variant<SparseLinearDgp, AteLogisticDgp, DenseDecayDgp>;

  explicit Dgp(Variant v);

  const Variant& variant() const noexcept { return v_; }
  std::string name() const;
  std::size_t covariate_dim() const;
  std::optional<std::size_t> treatment_col() const;

  /// E[Y | X = x].
  double regression(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// AteLogistic only: clipped propensity score at covariates z.
  double propensity(const Eigen::Ref<const Eigen::VectorXd>& z) const;

 private:
  Variant v_;
};

/// Coefficients of the regression function on the DGP's own dictionary
/// (SparseLinear and DenseDecay).
Eigen::VectorXd dgp_coefficients(const Dgp& dgp);

/// n i.i.d. draws; bit-identical for equal (dgp, n, seed).
Dataset generate(const Dgp& dgp, std::size_t n, std::uint64_t seed);

enum class TruthMethod { analytic, quadrature, monte_carlo };

const char* to_string(TruthMethod m) noexcept;

struct TrueValue {
  double value = 0.0;
  /// Zero for analytic values.
  double std_error = 0.0;
  TruthMethod method = TruthMethod::analytic;
};

/// theta = E m(X, gamma) for the DGP's regression function. Closed form where
/// one is implemented, otherwise a 10^7-draw Monte Carlo average.
TrueValue true_theta(const Dgp& dgp, const Functional& f);

/// E pi(Z) for an AteLogistic DGP, by adaptive quadrature over the
/// one-dimensional index Z'propensity_coefs.
TrueValue expected_propensity(const Dgp& dgp);

/// Closed-form Riesz representer alpha*(x); throws IncompatibleError when
/// none is available for (dgp, f).
double true_riesz(const Dgp& dgp, const Functional& f, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Seed of independent stream `stream` derived from `seed` (SplitMix64 of
/// seed + golden-ratio * (stream + 1)).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct MonteCarloConfig {
  Dictionary dict;
  Functional functional;
  DmlOptions dml;
  std::size_t replications = 100;
  std::size_t n = 500;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct ReplicationRecord {
  std::size_t rep = 0;
  std::uint64_t data_seed = 0;
  std::uint64_t fold_seed = 0;
  bool ok = false;
  std::string error;
  double theta_hat = 0.0;
  double sigma_hat = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  bool covered = false;
  /// max over fits of ||G t - M||_inf - lambda (<= 0 when every fit is feasible).
  double max_feasibility_excess = 0.0;
  double d_beta_sup = 0.0;
  double d_rho_sup = 0.0;
};

struct MonteCarloReport {
  std::size_t replications = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double true_theta = 0.0;
  TruthMethod truth_method = TruthMethod::analytic;
  std::size_t failures = 0;
  double mean_theta = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;
  double mean_ci_length = 0.0;
  double mean_sigma_hat = 0.0;
  std::vector<ReplicationRecord> per_rep;
};

/// R independent replications of generate + dml_estimate. Replication r uses
/// data seed derive_seed(seed, 2r) and fold seed derive_seed(seed, 2r + 1),
/// so results do not depend on execution order. Failed replications are
/// recorded and excluded from the aggregates.
MonteCarloReport run_monte_carlo(const Dgp& dgp, const MonteCarloConfig& config);

}  // namespace rieszdml
