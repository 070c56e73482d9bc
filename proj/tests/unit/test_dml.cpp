#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "../oracles/finite_difference.hpp"
#include "rieszdml/dml.hpp"
#include "rieszdml/error.hpp"
#include "rieszdml/simulation.hpp"

using namespace rieszdml;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Dgp sparse_dgp(std::size_t d, double noise_sd) {
  SparseLinearDgp spec{Dictionary::polynomial(d, 1), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d + 1))};
  spec.beta_star(1) = 1.0;
  spec.beta_star(2) = 0.5;
  spec.noise_sd = noise_sd;
  return Dgp(spec);
}

Functional first_derivative(std::size_t d) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  a(0) = 1.0;
  return Functional::average_derivative(a);
}

}  // namespace

// ---- folds -------------------------------------------------------------------

TEST(FoldPlan, PartitionWithBalancedSizes) {
  for (std::size_t n : {10u, 11u, 57u, 500u}) {
    for (std::size_t K : {2u, 3u, 5u}) {
      const FoldPlan plan = FoldPlan::random(n, K, 42);
      ASSERT_EQ(plan.size(), n);
      std::vector<int> seen(n, 0);
      std::size_t lo = n, hi = 0;
      for (std::size_t k = 0; k < K; ++k) {
        const auto rows = plan.fold_rows(k);
        EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end()));
        for (auto r : rows) ++seen[r];
        lo = std::min(lo, rows.size());
        hi = std::max(hi, rows.size());
      }
      EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
      EXPECT_GE(lo, 1u);
      EXPECT_LE(hi - lo, 1u);
    }
  }
}

TEST(FoldPlan, DeterministicInSeed) {
  EXPECT_EQ(FoldPlan::random(100, 5, 3).assignments(), FoldPlan::random(100, 5, 3).assignments());
  EXPECT_NE(FoldPlan::random(100, 5, 3).assignments(), FoldPlan::random(100, 5, 4).assignments());
}

TEST(FoldPlan, Validation) {
  EXPECT_THROW(FoldPlan::random(10, 1, 0), InvalidArgument);
  EXPECT_THROW(FoldPlan::random(3, 5, 0), InvalidArgument);
  EXPECT_THROW(FoldPlan::from_assignments({0, 0, 0, 1}, 2), InvalidArgument);
  EXPECT_THROW(FoldPlan::from_assignments({0, 0, 2, 1}, 2), InvalidArgument);
  EXPECT_THROW(FoldPlan::from_assignments({0, 0, 0, 0}, 2), InvalidArgument);
  EXPECT_NO_THROW(FoldPlan::from_assignments({0, 1, 1, 0, 1}, 2));
}

TEST(FoldPlan, SplitIsComplement) {
  const FoldPlan plan = FoldPlan::random(23, 4, 9);
  for (std::size_t k = 0; k < 4; ++k) {
    const CrossFitSplit s = plan.split(k);
    EXPECT_EQ(s.eval_rows().size() + s.train_rows().size(), 23u);
    for (auto r : s.eval_rows()) EXPECT_EQ(plan.assignments()[r], k);
    for (auto r : s.train_rows()) EXPECT_NE(plan.assignments()[r], k);
  }
}

TEST(CrossFitSplit, RejectsLeak) {
  // Fitting nuisances on the evaluation fold itself cannot be expressed.
  EXPECT_THROW(CrossFitSplit({0, 1, 2}, {2, 3, 4}), InvalidArgument);
  EXPECT_THROW(CrossFitSplit({0, 1}, {0, 1}), InvalidArgument);
  EXPECT_THROW(CrossFitSplit({}, {0, 1}), InvalidArgument);
  EXPECT_NO_THROW(CrossFitSplit({0, 1}, {2, 3}));
}

// ---- score -------------------------------------------------------------------

TEST(Score, ZeroEverything) {
  const Dictionary dict = Dictionary::polynomial(2, 2);
  const auto p = static_cast<Eigen::Index>(dict.output_dim());
  const Observation w{1.5, vec({0.3, -0.7})};
  EXPECT_EQ(score_psi(w, 0.0, Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(p), dict, first_derivative(2)), 0.0);
}

TEST(Score, WorkedExample) {
  // b(x) = (1, x), m(x, b) = (0, 1).
  const Dictionary dict = Dictionary::polynomial(1, 1);
  const Functional f = Functional::average_derivative(vec({1.0}));
  const Observation w{3.0, vec({2.0})};
  EXPECT_DOUBLE_EQ(score_psi(w, 5.0, vec({1, 1}), vec({0, 1}), dict, f), 4.0);
}

TEST(Score, DimensionMismatch) {
  const Dictionary dict = Dictionary::polynomial(1, 1);
  const Functional f = Functional::average_derivative(vec({1.0}));
  const Observation w{3.0, vec({2.0})};
  EXPECT_THROW(score_psi(w, 0.0, vec({1, 1, 1}), vec({0, 1}), dict, f), DimensionError);
  EXPECT_THROW(score_derivatives(w, 0.0, vec({1, 1}), vec({0}), dict, f), DimensionError);
}

TEST(ScoreDerivatives, ZeroRho) {
  const Dictionary dict = Dictionary::polynomial(2, 2, true);
  const Functional f = first_derivative(2);
  const Observation w{0.4, vec({0.5, -1.0})};
  const auto p = static_cast<Eigen::Index>(dict.output_dim());
  const auto d = score_derivatives(w, 0.0, Eigen::VectorXd::Ones(p), Eigen::VectorXd::Zero(p), dict, f);
  EXPECT_TRUE(d.d_beta.isApprox(-m_of_basis(f, dict, w.x)));
}

TEST(ScoreDerivatives, ZeroResidual) {
  const Dictionary dict = Dictionary::polynomial(2, 2, true);
  const Observation x{0.0, vec({0.5, -1.0})};
  const Eigen::VectorXd beta = vec({0.1, 0.2, -0.3, 0.4, 0.5, -0.6});
  const Observation w{dict.evaluate(x.x).dot(beta), x.x};
  const auto d = score_derivatives(w, 0.0, beta, Eigen::VectorXd::Ones(6), dict, first_derivative(2));
  EXPECT_LE(d.d_rho.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ScoreDerivatives, MatchFiniteDifferences) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> z;
  const Dictionary dict = Dictionary::polynomial(3, 2, true);
  const Functional f = first_derivative(3);
  const auto p = static_cast<Eigen::Index>(dict.output_dim());
  for (int t = 0; t < 20; ++t) {
    const Observation w{z(rng), vec({z(rng), z(rng), z(rng)})};
    Eigen::VectorXd beta(p), rho(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      beta(j) = z(rng);
      rho(j) = z(rng);
    }
    const double theta = z(rng);
    const auto d = score_derivatives(w, theta, beta, rho, dict, f);
    const Eigen::VectorXd fd_beta = rieszdml::testing::central_gradient(
        [&](const Eigen::VectorXd& b) { return score_psi(w, theta, b, rho, dict, f); }, beta, 1e-6);
    const Eigen::VectorXd fd_rho = rieszdml::testing::central_gradient(
        [&](const Eigen::VectorXd& r) { return score_psi(w, theta, beta, r, dict, f); }, rho, 1e-6);
    EXPECT_LE((fd_beta - d.d_beta).norm(), 1e-6 * std::max(1.0, d.d_beta.norm()));
    EXPECT_LE((fd_rho - d.d_rho).norm(), 1e-6 * std::max(1.0, d.d_rho.norm()));
  }
}

TEST(Score, PopulationMeanIsZeroAtTruth) {
  // Gaussian design, degree-1 dictionary: beta_0 = beta*, rho_0 = e_{x1}
  // (alpha_0(x) = x1), theta_0 = beta*_1.
  const std::size_t d = 3;
  const Dgp dgp = sparse_dgp(d, 1.0);
  const Dataset data = generate(dgp, 100000, 31);
  const Dictionary dict = Dictionary::polynomial(d, 1);
  const Functional f = first_derivative(d);
  const Eigen::VectorXd beta = dgp_coefficients(dgp);
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(4);
  rho(1) = 1.0;
  const double theta = true_theta(dgp, f).value;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double psi = score_psi({data.y(i), data.x(i)}, theta, beta, rho, dict, f);
    sum += psi;
    sum_sq += psi * psi;
  }
  const double n = static_cast<double>(data.size());
  const double mean = sum / n;
  const double sd = std::sqrt(sum_sq / n - mean * mean);
  EXPECT_LE(std::abs(mean), 3.0 * sd / std::sqrt(n));
}

// ---- fold_theta --------------------------------------------------------------

TEST(FoldTheta, ExactRoot) {
  const Dataset data = generate(sparse_dgp(4, 1.0), 200, 41);
  const Dictionary dict = Dictionary::polynomial(4, 2);
  const Functional f = first_derivative(4);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  const auto p = static_cast<Eigen::Index>(dict.output_dim());
  Eigen::VectorXd beta(p), rho(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    beta(j) = z(rng);
    rho(j) = z(rng);
  }
  const std::vector<std::size_t> rows{1, 5, 9, 17, 33, 70, 120, 199};
  const double theta = fold_theta(data, rows, beta, rho, dict, f);
  double mean_psi = 0.0;
  for (auto i : rows) mean_psi += score_psi({data.y(i), data.x(i)}, theta, beta, rho, dict, f);
  mean_psi /= static_cast<double>(rows.size());
  EXPECT_LE(std::abs(mean_psi), 1e-12);
}

TEST(FoldTheta, PlugInWhenRhoIsZero) {
  const Dataset data = generate(sparse_dgp(2, 1.0), 50, 42);
  const Dictionary dict = Dictionary::polynomial(2, 2);
  const Functional f = first_derivative(2);
  const Eigen::VectorXd beta = vec({0.3, 1.0, -0.5, 0.2, 0.1});
  const auto rows = all_rows(data.size());
  const double theta = fold_theta(data, rows, beta, Eigen::VectorXd::Zero(5), dict, f);
  EXPECT_NEAR(theta, m_hat_vector(f, dict, data, rows).dot(beta), 1e-13);
}

TEST(FoldTheta, ExactNuisanceHasNoCorrection) {
  const Dgp dgp = sparse_dgp(2, 0.0);
  const Dataset data = generate(dgp, 50, 43);
  const Dictionary dict = Dictionary::polynomial(2, 1);
  const Functional f = first_derivative(2);
  const auto rows = all_rows(data.size());
  const Eigen::VectorXd beta = dgp_coefficients(dgp);
  EXPECT_NEAR(fold_theta(data, rows, beta, vec({5, -3, 2}), dict, f),
              fold_theta(data, rows, beta, Eigen::VectorXd::Zero(3), dict, f), 1e-13);
}

TEST(FoldTheta, EmptyFold) {
  const Dataset data = generate(sparse_dgp(2, 1.0), 20, 44);
  const Dictionary dict = Dictionary::polynomial(2, 1);
  EXPECT_THROW(fold_theta(data, {}, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), dict, first_derivative(2)),
               InvalidArgument);
}

// ---- orthogonality -------------------------------------------------------------

TEST(Orthogonality, SameSampleFitsAreWithinLambda) {
  const Dataset data = generate(sparse_dgp(9, 1.0), 300, 51);
  const Dictionary dict = Dictionary::polynomial(9, 2);
  const Functional f = first_derivative(9);
  const auto rows = all_rows(data.size());
  const auto blp = estimate_blp(data, rows, dict, LambdaRule());
  const auto riesz = estimate_riesz(data, rows, dict, f, LambdaRule());
  const auto rep = orthogonality_report(data, rows, dict, f, blp.coef, riesz.coef, blp.lambda, riesz.lambda);
  EXPECT_LE(rep.d_beta_sup, riesz.lambda + 1e-7);
  EXPECT_LE(rep.d_rho_sup, blp.lambda + 1e-7);
  EXPECT_TRUE(rep.within_bounds);
}

TEST(Orthogonality, ZeroNuisancesAndOutcome) {
  const Dataset base = generate(sparse_dgp(3, 1.0), 40, 52);
  const Dataset data(Eigen::VectorXd::Zero(40), base.covariates());
  const Dictionary dict = Dictionary::polynomial(3, 2);
  const Functional f = first_derivative(3);
  const auto rows = all_rows(data.size());
  const auto p = static_cast<Eigen::Index>(dict.output_dim());
  const auto rep = orthogonality_report(data, rows, dict, f, Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(p));
  EXPECT_NEAR(rep.d_beta_sup, m_hat_vector(f, dict, data, rows).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(rep.d_rho_sup, 0.0);
}

TEST(Orthogonality, PopulationReportAtTruthVanishes) {
  const std::size_t d = 3;
  const Dgp dgp = sparse_dgp(d, 1.0);
  const Dataset data = generate(dgp, 200000, 53);
  const Dictionary dict = Dictionary::polynomial(d, 1);
  const Functional f = first_derivative(d);
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(4);
  rho(1) = 1.0;
  const auto rep = orthogonality_report(data, all_rows(data.size()), dict, f, dgp_coefficients(dgp), rho);
  // Each coordinate is an average of terms with variance at most 3.
  const double slack = 5.0 * std::sqrt(3.0 / 200000.0);
  EXPECT_LE(rep.d_beta_sup, slack);
  EXPECT_LE(rep.d_rho_sup, slack);
}

// ---- dml_estimate ------------------------------------------------------------

namespace {

DmlOptions default_options(std::uint64_t seed = 7) {
  DmlOptions o;
  o.seed = seed;
  return o;
}

}  // namespace

TEST(DmlEstimate, InvariantsHold) {
  const Dataset data = generate(sparse_dgp(9, 1.0), 400, 61);
  const Dictionary dict = Dictionary::polynomial(9, 1);
  const auto r = dml_estimate(data, dict, first_derivative(9), default_options());
  ASSERT_EQ(r.per_fold_theta.size(), 5u);
  const double mean = std::accumulate(r.per_fold_theta.begin(), r.per_fold_theta.end(), 0.0) / 5.0;
  EXPECT_NEAR(mean, r.theta_hat, 1e-12);
  EXPECT_LE(r.ci_lower, r.theta_hat);
  EXPECT_GE(r.ci_upper, r.theta_hat);
  EXPECT_TRUE(std::isfinite(r.sigma_hat));
  EXPECT_GT(r.sigma_hat, 0.0);
  EXPECT_NEAR(r.ci_upper - r.ci_lower, 2.0 * 1.959963984540054 * r.sigma_hat / 20.0, 1e-12);
  EXPECT_EQ(r.status, DmlStatus::ok);
  EXPECT_EQ(r.n, 400u);
  for (const auto& fit : r.per_fold) {
    EXPECT_EQ(fit.blp.sample_size + fit.eval_size, 400u);
    EXPECT_LE(fit.blp.solution.max_residual, fit.blp.lambda + 1e-7);
    EXPECT_LE(fit.riesz.solution.max_residual, fit.riesz.lambda + 1e-7);
  }
  EXPECT_NEAR(r.theta_hat, 1.0, 0.3);
}

TEST(DmlEstimate, FoldThetaMatchesPerFoldValues) {
  const Dataset data = generate(sparse_dgp(4, 1.0), 120, 62);
  const Dictionary dict = Dictionary::polynomial(4, 1);
  const Functional f = first_derivative(4);
  const FoldPlan plan = FoldPlan::random(120, 3, 5);
  const auto r = dml_estimate(data, dict, f, plan, default_options());
  for (std::size_t k = 0; k < 3; ++k) {
    const auto rows = plan.fold_rows(k);
    EXPECT_NEAR(fold_theta(data, rows, r.per_fold[k].blp.coef, r.per_fold[k].riesz.coef, dict, f),
                r.per_fold_theta[k], 1e-12);
  }
}

TEST(DmlEstimate, Deterministic) {
  const Dataset data = generate(sparse_dgp(9, 1.0), 300, 63);
  const Dictionary dict = Dictionary::polynomial(9, 1);
  const auto a = dml_estimate(data, dict, first_derivative(9), default_options(11));
  const auto b = dml_estimate(data, dict, first_derivative(9), default_options(11));
  EXPECT_EQ(a.theta_hat, b.theta_hat);
  EXPECT_EQ(a.sigma_hat, b.sigma_hat);
  EXPECT_EQ(a.per_fold_theta, b.per_fold_theta);
}

TEST(DmlEstimate, ThreadCountDoesNotChangeResult) {
  const Dataset data = generate(sparse_dgp(9, 1.0), 300, 64);
  const Dictionary dict = Dictionary::polynomial(9, 1);
  DmlOptions serial = default_options(3), threaded = default_options(3);
  threaded.threads = 4;
  const auto a = dml_estimate(data, dict, first_derivative(9), serial);
  const auto b = dml_estimate(data, dict, first_derivative(9), threaded);
  EXPECT_EQ(a.theta_hat, b.theta_hat);
  EXPECT_EQ(a.sigma_hat, b.sigma_hat);
}

TEST(DmlEstimate, PermutationInvariance) {
  const std::size_t n = 250;
  const Dataset data = generate(sparse_dgp(6, 1.0), n, 65);
  const Dictionary dict = Dictionary::polynomial(6, 1);
  const Functional f = first_derivative(6);
  const FoldPlan plan = FoldPlan::random(n, 5, 8);

  std::vector<std::size_t> perm = all_rows(n);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(99));
  std::vector<std::size_t> assignments(n);
  for (std::size_t i = 0; i < n; ++i) assignments[i] = plan.assignments()[perm[i]];

  const auto a = dml_estimate(data, dict, f, plan, default_options());
  const auto b = dml_estimate(data.permuted(perm), dict, f, FoldPlan::from_assignments(assignments, 5),
                              default_options());
  EXPECT_NEAR(a.theta_hat, b.theta_hat, 1e-12);
}

TEST(DmlEstimate, ScalingOutcome) {
  const std::size_t n = 400;
  const Dgp dgp = sparse_dgp(4, 1.0);
  const Dataset data = generate(dgp, n, 66);
  const Dictionary dict = Dictionary::polynomial(4, 1);
  const Functional f = first_derivative(4);
  const FoldPlan plan = FoldPlan::random(n, 5, 1);
  const auto base = dml_estimate(data, dict, f, plan, default_options());
  for (double c : {0.5, 3.0}) {
    const Dataset scaled(c * data.outcome(), data.covariates());
    DmlOptions o = default_options();
    o.blp_rule = o.blp_rule.scaled(c);
    const auto r = dml_estimate(scaled, dict, f, plan, o);
    EXPECT_NEAR(r.theta_hat, c * base.theta_hat, 1e-9 * c);
  }
}

TEST(DmlEstimate, ScalingOutcomeAte) {
  AteLogisticDgp spec;
  spec.outcome_coefs = vec({0.5, 0.0, -0.25});
  spec.propensity_coefs = vec({0.25, -0.25, 0.0});
  const Dataset data = generate(Dgp(spec), 600, 67);
  const Dictionary dict = Dictionary::treatment_interacted(Dictionary::polynomial(3, 1), 0);
  const Functional f = Functional::average_treatment_effect(0);
  const FoldPlan plan = FoldPlan::random(600, 5, 2);
  const auto base = dml_estimate(data, dict, f, plan, default_options());
  const double c = 2.5;
  const Dataset scaled(c * data.outcome(), data.covariates(), 0);
  DmlOptions o = default_options();
  o.blp_rule = o.blp_rule.scaled(c);
  EXPECT_NEAR(dml_estimate(scaled, dict, f, plan, o).theta_hat, c * base.theta_hat, 1e-9 * c);
}

TEST(DmlEstimate, TwoAndFiveFolds) {
  const Dataset data = generate(sparse_dgp(9, 1.0), 1000, 68);
  const Dictionary dict = Dictionary::polynomial(9, 1);
  DmlOptions two = default_options(), five = default_options();
  two.folds = 2;
  const auto a = dml_estimate(data, dict, first_derivative(9), two);
  const auto b = dml_estimate(data, dict, first_derivative(9), five);
  EXPECT_EQ(a.per_fold_theta.size(), 2u);
  EXPECT_EQ(b.per_fold_theta.size(), 5u);
  EXPECT_NEAR(a.theta_hat, b.theta_hat, 4.0 * b.sigma_hat / std::sqrt(1000.0));
}

TEST(DmlEstimate, DegenerateVariance) {
  const Dataset base = generate(sparse_dgp(3, 1.0), 50, 69);
  const Dataset data(Eigen::VectorXd::Zero(50), base.covariates());
  const auto r = dml_estimate(data, Dictionary::polynomial(3, 1), first_derivative(3), default_options());
  EXPECT_EQ(r.status, DmlStatus::degenerate_variance);
  EXPECT_EQ(r.sigma_hat, 0.0);
  EXPECT_EQ(r.ci_lower, r.ci_upper);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(DmlEstimate, PlugInBaseline) {
  const Dataset data = generate(sparse_dgp(4, 1.0), 200, 70);
  const Dictionary dict = Dictionary::polynomial(4, 1);
  const Functional f = first_derivative(4);
  const FoldPlan plan = FoldPlan::random(200, 5, 1);
  DmlOptions o = default_options();
  o.riesz_correction = false;
  const auto r = dml_estimate(data, dict, f, plan, o);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_TRUE(r.per_fold[k].riesz.coef.isZero());
    EXPECT_NEAR(r.per_fold_theta[k], m_hat_vector(f, dict, data, plan.fold_rows(k)).dot(r.per_fold[k].blp.coef),
                1e-13);
  }
}

TEST(DmlEstimate, InfeasibleFoldIsNamed) {
  const Dataset data = generate(sparse_dgp(4, 1.0), 100, 71);
  DmlOptions o = default_options();
  o.l1_bound = 1e-3;
  try {
    dml_estimate(data, Dictionary::polynomial(4, 1), first_derivative(4), o);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.fold(), 0u);
    EXPECT_TRUE(e.infeasible());
    EXPECT_NE(std::string(e.what()).find("fold 0"), std::string::npos);
  }
}

TEST(DmlEstimate, Preconditions) {
  const Dataset data = generate(sparse_dgp(2, 1.0), 9, 72);
  const Dictionary dict = Dictionary::polynomial(2, 1);
  EXPECT_THROW(dml_estimate(data, dict, first_derivative(2), default_options()), InvalidArgument);
  DmlOptions o = default_options();
  o.folds = 1;
  EXPECT_THROW(dml_estimate(data, dict, first_derivative(2), o), InvalidArgument);
  const Dataset larger = generate(sparse_dgp(2, 1.0), 40, 73);
  EXPECT_THROW(dml_estimate(larger, dict, Functional::average_treatment_effect(0), default_options()),
               IncompatibleError);
}
