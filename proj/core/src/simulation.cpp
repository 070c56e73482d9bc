#include "rieszdml/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rieszdml/error.hpp"
#include "rieszdml/parallel.hpp"

namespace rieszdml {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::size_t kTruthDraws = 10'000'000;
constexpr std::uint64_t kTruthSeed = 0x7472757468ULL;

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

double clip_propensity(double p) { return std::clamp(p, kPropensityFloor, kPropensityCeiling); }

/// E x^k for one coordinate.
double raw_moment(CovariateLaw law, int k) {
  if (k % 2 == 1) return 0.0;
  if (law == CovariateLaw::uniform) return 1.0 / (k + 1.0);
  double m = 1.0;  // (k-1)!!
  for (int j = k - 1; j > 1; j -= 2) m *= j;
  return m;
}

/// E (s x + c)^k.
double affine_moment(CovariateLaw law, double s, double c, int k) {
  double total = 0.0;
  double binom = 1.0;
  for (int i = 0; i <= k; ++i) {
    total += binom * std::pow(s, i) * std::pow(c, k - i) * raw_moment(law, i);
    binom = binom * (k - i) / (i + 1);
  }
  return total;
}

struct LinearInDictionary {
  const Dictionary* dict;
  Eigen::VectorXd coefs;
  CovariateLaw law;
};

std::optional<LinearInDictionary> as_linear(const Dgp& dgp) {
  return std::visit(overloaded{
                        [](const SparseLinearDgp& d) -> std::optional<LinearInDictionary> {
                          return LinearInDictionary{&d.dict, d.beta_star, d.x_dist};
                        },
                        [&](const DenseDecayDgp& d) -> std::optional<LinearInDictionary> {
                          return LinearInDictionary{&d.dict, dgp_coefficients(dgp), d.x_dist};
                        },
                        [](const AteLogisticDgp&) -> std::optional<LinearInDictionary> { return std::nullopt; },
                    },
                    dgp.variant());
}

Eigen::VectorXd draw_covariates(std::mt19937_64& rng, std::size_t d, CovariateLaw law) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(d));
  if (law == CovariateLaw::standard_normal) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : x) v = normal(rng);
  } else {
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    for (auto& v : x) v = uniform(rng);
  }
  return x;
}

std::optional<double> analytic_theta_linear(const LinearInDictionary& lin, const Functional& f) {
  const auto exps = lin.dict->monomial_exponents();
  if (!exps) return std::nullopt;
  const Eigen::Index p = exps->rows();
  const Eigen::Index d = exps->cols();
  return std::visit(
      overloaded{
          [&](const AverageDerivative& a) -> std::optional<double> {
            double theta = 0.0;
            for (Eigen::Index j = 0; j < p; ++j) {
              if (lin.coefs(j) == 0.0) continue;
              double dj = 0.0;
              for (Eigen::Index k = 0; k < d; ++k) {
                const int ek = (*exps)(j, k);
                if (ek == 0 || a.direction(k) == 0.0) continue;
                double term = ek * raw_moment(lin.law, ek - 1);
                for (Eigen::Index l = 0; l < d && term != 0.0; ++l)
                  if (l != k) term *= raw_moment(lin.law, (*exps)(j, l));
                dj += a.direction(k) * term;
              }
              theta += lin.coefs(j) * dj;
            }
            return theta;
          },
          [&](const PolicyShift& s) -> std::optional<double> {
            const Eigen::MatrixXd off = s.transport_matrix - Eigen::MatrixXd(s.transport_matrix.diagonal().asDiagonal());
            if (off.cwiseAbs().maxCoeff() != 0.0) return std::nullopt;
            double theta = 0.0;
            for (Eigen::Index j = 0; j < p; ++j) {
              if (lin.coefs(j) == 0.0) continue;
              double moved = 1.0;
              double base = 1.0;
              for (Eigen::Index k = 0; k < d; ++k) {
                const int ek = (*exps)(j, k);
                moved *= affine_moment(lin.law, s.transport_matrix(k, k), s.transport_shift(k), ek);
                base *= raw_moment(lin.law, ek);
              }
              theta += lin.coefs(j) * (moved - base);
            }
            return theta;
          },
          [](const AverageTreatmentEffect&) -> std::optional<double> { return std::nullopt; },
      },
      f.variant());
}

TrueValue monte_carlo_theta(const Dgp& dgp, const Dictionary& dict, const Eigen::VectorXd& coefs, CovariateLaw law,
                            const Functional& f) {
  std::mt19937_64 rng(kTruthSeed);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < kTruthDraws; ++i) {
    const Eigen::VectorXd x = draw_covariates(rng, dgp.covariate_dim(), law);
    const double v = m_of_gamma(f, dict, x, coefs);
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  const double n = static_cast<double>(kTruthDraws);
  return {mean, std::sqrt(m2 / (n - 1.0) / n), TruthMethod::monte_carlo};
}

}  // namespace

const char* to_string(CovariateLaw law) noexcept {
  return law == CovariateLaw::standard_normal ? "normal" : "uniform";
}

const char* to_string(TruthMethod m) noexcept {
  switch (m) {
    case TruthMethod::analytic: return "analytic";
    case TruthMethod::quadrature: return "quadrature";
    case TruthMethod::monte_carlo: return "monte_carlo";
  }
  return "unknown";
}

Dgp::Dgp(Variant v) : v_(std::move(v)) {
  std::visit(overloaded{
                 [](const SparseLinearDgp& d) {
                   if (static_cast<std::size_t>(d.beta_star.size()) != d.dict.output_dim())
                     throw DimensionError("dgp: beta_star length != dictionary output_dim");
                   if (d.dict.treatment_index()) throw InvalidArgument("dgp: sparse_linear has no treatment");
                   if (!d.beta_star.allFinite()) throw InvalidArgument("dgp: non-finite beta_star");
                   if (!(d.noise_sd >= 0.0) || !std::isfinite(d.noise_sd)) throw InvalidArgument("dgp: noise_sd must be >= 0");
                 },
                 [](const AteLogisticDgp& d) {
                   if (d.outcome_coefs.size() == 0 || d.outcome_coefs.size() != d.propensity_coefs.size())
                     throw DimensionError("dgp: outcome and propensity coefficients need the same positive length");
                   if (!d.outcome_coefs.allFinite() || !d.propensity_coefs.allFinite() || !std::isfinite(d.tau) ||
                       !std::isfinite(d.propensity_intercept))
                     throw InvalidArgument("dgp: non-finite coefficient");
                   if (!(d.noise_sd >= 0.0) || !std::isfinite(d.noise_sd)) throw InvalidArgument("dgp: noise_sd must be >= 0");
                 },
                 [](const DenseDecayDgp& d) {
                   if (d.dict.treatment_index()) throw InvalidArgument("dgp: dense_decay has no treatment");
                   if (!std::isfinite(d.decay_rate) || d.decay_rate < 0.0) throw InvalidArgument("dgp: decay rate must be >= 0");
                   if (!std::isfinite(d.scale)) throw InvalidArgument("dgp: non-finite scale");
                   if (!(d.noise_sd >= 0.0) || !std::isfinite(d.noise_sd)) throw InvalidArgument("dgp: noise_sd must be >= 0");
                 },
             },
             v_);
}

std::string Dgp::name() const {
  return std::visit(overloaded{
                        [](const SparseLinearDgp&) { return std::string("sparse_linear"); },
                        [](const AteLogisticDgp&) { return std::string("ate_logistic"); },
                        [](const DenseDecayDgp&) { return std::string("dense_decay"); },
                    },
                    v_);
}

std::size_t Dgp::covariate_dim() const {
  return std::visit(overloaded{
                        [](const SparseLinearDgp& d) { return d.dict.input_dim(); },
                        [](const AteLogisticDgp& d) { return static_cast<std::size_t>(d.outcome_coefs.size()) + 1; },
                        [](const DenseDecayDgp& d) { return d.dict.input_dim(); },
                    },
                    v_);
}

std::optional<std::size_t> Dgp::treatment_col() const {
  if (std::holds_alternative<AteLogisticDgp>(v_)) return 0;
  return std::nullopt;
}

double Dgp::propensity(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  const auto* d = std::get_if<AteLogisticDgp>(&v_);
  if (!d) throw IncompatibleError("dgp: propensity is only defined for ate_logistic");
  if (z.size() != d->propensity_coefs.size()) throw DimensionError("dgp: propensity input length mismatch");
  return clip_propensity(logistic(d->propensity_intercept + z.dot(d->propensity_coefs)));
}

double Dgp::regression(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (static_cast<std::size_t>(x.size()) != covariate_dim()) throw DimensionError("dgp: covariate length mismatch");
  return std::visit(overloaded{
                        [&](const SparseLinearDgp& d) { return d.dict.evaluate(x).dot(d.beta_star); },
                        [&](const AteLogisticDgp& d) {
                          return d.tau * x(0) + x.tail(x.size() - 1).dot(d.outcome_coefs);
                        },
                        [&](const DenseDecayDgp& d) { return d.dict.evaluate(x).dot(dgp_coefficients(*this)); },
                    },
                    v_);
}

Eigen::VectorXd dgp_coefficients(const Dgp& dgp) {
  return std::visit(overloaded{
                        [](const SparseLinearDgp& d) -> Eigen::VectorXd { return d.beta_star; },
                        [](const DenseDecayDgp& d) -> Eigen::VectorXd {
                          Eigen::VectorXd beta(static_cast<Eigen::Index>(d.dict.output_dim()));
                          for (Eigen::Index j = 0; j < beta.size(); ++j)
                            beta(j) = d.scale * std::pow(static_cast<double>(j + 1), -d.decay_rate);
                          return beta;
                        },
                        [](const AteLogisticDgp&) -> Eigen::VectorXd {
                          throw IncompatibleError("dgp: ate_logistic is not defined through a dictionary");
                        },
                    },
                    dgp.variant());
}

Dataset generate(const Dgp& dgp, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("generate: need n >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t d = dgp.covariate_dim();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));

  std::visit(overloaded{
                 [&](const SparseLinearDgp& g) {
                   for (Eigen::Index i = 0; i < x.rows(); ++i) {
                     const Eigen::VectorXd xi = draw_covariates(rng, d, g.x_dist);
                     x.row(i) = xi.transpose();
                     y(i) = g.dict.evaluate(xi).dot(g.beta_star) + g.noise_sd * noise(rng);
                   }
                 },
                 [&](const DenseDecayDgp& g) {
                   const Eigen::VectorXd beta = dgp_coefficients(dgp);
                   for (Eigen::Index i = 0; i < x.rows(); ++i) {
                     const Eigen::VectorXd xi = draw_covariates(rng, d, g.x_dist);
                     x.row(i) = xi.transpose();
                     y(i) = g.dict.evaluate(xi).dot(beta) + g.noise_sd * noise(rng);
                   }
                 },
                 [&](const AteLogisticDgp& g) {
                   for (Eigen::Index i = 0; i < x.rows(); ++i) {
                     const Eigen::VectorXd z = draw_covariates(rng, d - 1, CovariateLaw::standard_normal);
                     std::bernoulli_distribution treat(dgp.propensity(z));
                     const double t = treat(rng) ? 1.0 : 0.0;
                     x(i, 0) = t;
                     x.row(i).tail(static_cast<Eigen::Index>(d - 1)) = z.transpose();
                     y(i) = g.tau * t + z.dot(g.outcome_coefs) + g.noise_sd * noise(rng);
                   }
                 },
             },
             dgp.variant());
  return Dataset(std::move(y), std::move(x), dgp.treatment_col());
}

TrueValue expected_propensity(const Dgp& dgp) {
  const auto* g = std::get_if<AteLogisticDgp>(&dgp.variant());
  if (!g) throw IncompatibleError("expected_propensity: ate_logistic only");
  // The index a + Z'k is N(a, s^2) with s = ||k||.
  const double a = g->propensity_intercept;
  const double s = g->propensity_coefs.norm();
  if (s == 0.0) return {clip_propensity(logistic(a)), 0.0, TruthMethod::analytic};
  const boost::math::normal standard;
  const double logit_hi = std::log(kPropensityCeiling / (1.0 - kPropensityCeiling));
  const double logit_lo = std::log(kPropensityFloor / (1.0 - kPropensityFloor));
  // u is the standardized index; clipping is active outside [lo, hi].
  const double lo = (logit_lo - a) / s;
  const double hi = (logit_hi - a) / s;
  double total = kPropensityFloor * boost::math::cdf(standard, lo) +
                 kPropensityCeiling * boost::math::cdf(boost::math::complement(standard, hi));
  double error = 0.0;
  auto integrand = [&](double u) { return logistic(a + s * u) * boost::math::pdf(standard, u); };
  total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, lo, hi, 15, 1e-14, &error);
  return {total, error, TruthMethod::quadrature};
}

TrueValue true_theta(const Dgp& dgp, const Functional& f) {
  if (const auto lin = as_linear(dgp)) {
    f.check_compatible(*lin->dict);
    if (const auto v = analytic_theta_linear(*lin, f)) return {*v, 0.0, TruthMethod::analytic};
    return monte_carlo_theta(dgp, *lin->dict, lin->coefs, lin->law, f);
  }
  const auto& g = std::get<AteLogisticDgp>(dgp.variant());
  const auto d = static_cast<Eigen::Index>(dgp.covariate_dim());
  Eigen::VectorXd slope(d);
  slope(0) = g.tau;
  slope.tail(d - 1) = g.outcome_coefs;
  return std::visit(
      overloaded{
          [&](const AverageTreatmentEffect& t) -> TrueValue {
            if (t.treatment_col != 0) throw IncompatibleError("true_theta: ate_logistic treatment is covariate 0");
            return {g.tau, 0.0, TruthMethod::analytic};
          },
          [&](const AverageDerivative& a) -> TrueValue {
            if (a.direction.size() != d) throw DimensionError("true_theta: direction length mismatch");
            return {a.direction.dot(slope), 0.0, TruthMethod::analytic};
          },
          [&](const PolicyShift& s) -> TrueValue {
            if (s.transport_shift.size() != d) throw DimensionError("true_theta: transport dimension mismatch");
            // gamma is linear: E[gamma(SX + c) - gamma(X)] = slope'((S - I) E X + c), E X = (E pi, 0, ...).
            const Eigen::MatrixXd moved = s.transport_matrix - Eigen::MatrixXd::Identity(d, d);
            const double weight = slope.dot(moved.col(0));
            const double base = slope.dot(s.transport_shift);
            if (weight == 0.0) return {base, 0.0, TruthMethod::analytic};
            const TrueValue ep = expected_propensity(dgp);
            return {base + weight * ep.value, std::abs(weight) * ep.std_error, TruthMethod::quadrature};
          },
      },
      f.variant());
}

double true_riesz(const Dgp& dgp, const Functional& f, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (static_cast<std::size_t>(x.size()) != dgp.covariate_dim()) throw DimensionError("true_riesz: covariate length mismatch");
  if (const auto* s = std::get_if<PolicyShift>(&f.variant())) {
    const auto d = s->transport_shift.size();
    if (s->transport_matrix == Eigen::MatrixXd::Identity(d, d) && s->transport_shift.isZero(0.0)) return 0.0;
    throw IncompatibleError("true_riesz: no closed form for a non-trivial policy shift");
  }
  if (const auto* g = std::get_if<AteLogisticDgp>(&dgp.variant())) {
    (void)g;
    if (!std::holds_alternative<AverageTreatmentEffect>(f.variant()))
      throw IncompatibleError("true_riesz: ate_logistic has a closed form only for the ate functional");
    const double pi = dgp.propensity(x.tail(x.size() - 1));
    return x(0) == 1.0 ? 1.0 / pi : -1.0 / (1.0 - pi);
  }
  const auto lin = as_linear(dgp);
  if (lin->law != CovariateLaw::standard_normal)
    throw IncompatibleError("true_riesz: closed form needs standard normal covariates");
  if (const auto* a = std::get_if<AverageDerivative>(&f.variant())) {
    if (a->direction.size() != x.size()) throw DimensionError("true_riesz: direction length mismatch");
    // -a' grad log phi(x) = a'x
    return a->direction.dot(x);
  }
  throw IncompatibleError("true_riesz: no closed form for this functional");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

MonteCarloReport run_monte_carlo(const Dgp& dgp, const MonteCarloConfig& config) {
  if (config.replications < 1) throw InvalidArgument("monte carlo: need at least one replication");
  if (config.dict.input_dim() != dgp.covariate_dim())
    throw DimensionError("monte carlo: estimation dictionary input_dim != covariate dimension");
  const TrueValue truth = true_theta(dgp, config.functional);

  MonteCarloReport report;
  report.replications = config.replications;
  report.n = config.n;
  report.seed = config.seed;
  report.true_theta = truth.value;
  report.truth_method = truth.method;
  report.per_rep.resize(config.replications);

  parallel_for(config.replications, config.threads, [&](std::size_t r) {
    ReplicationRecord& rec = report.per_rep[r];
    rec.rep = r;
    rec.data_seed = derive_seed(config.seed, 2 * r);
    rec.fold_seed = derive_seed(config.seed, 2 * r + 1);
    try {
      const Dataset data = generate(dgp, config.n, rec.data_seed);
      DmlOptions opts = config.dml;
      opts.seed = rec.fold_seed;
      opts.threads = 1;
      const DmlResult res = dml_estimate(data, config.dict, config.functional, opts);
      rec.ok = true;
      rec.theta_hat = res.theta_hat;
      rec.sigma_hat = res.sigma_hat;
      rec.ci_lower = res.ci_lower;
      rec.ci_upper = res.ci_upper;
      rec.covered = res.ci_lower <= truth.value && truth.value <= res.ci_upper;
      rec.d_beta_sup = res.orthogonality.d_beta_sup;
      rec.d_rho_sup = res.orthogonality.d_rho_sup;
      rec.max_feasibility_excess = -std::numeric_limits<double>::infinity();
      for (const FoldFit& fit : res.per_fold) {
        rec.max_feasibility_excess =
            std::max(rec.max_feasibility_excess, fit.blp.solution.max_residual - fit.blp.lambda);
        if (opts.riesz_correction) {
          rec.max_feasibility_excess =
              std::max(rec.max_feasibility_excess, fit.riesz.solution.max_residual - fit.riesz.lambda);
        }
      }
    } catch (const Error& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });

  std::size_t ok = 0;
  double sum = 0.0, sum_sq = 0.0, covered = 0.0, length = 0.0, sigma = 0.0;
  for (const auto& rec : report.per_rep) {
    if (!rec.ok) {
      ++report.failures;
      continue;
    }
    ++ok;
    const double err = rec.theta_hat - truth.value;
    sum += rec.theta_hat;
    sum_sq += err * err;
    covered += rec.covered ? 1.0 : 0.0;
    length += rec.ci_upper - rec.ci_lower;
    sigma += rec.sigma_hat;
  }
  if (ok > 0) {
    const double k = static_cast<double>(ok);
    report.mean_theta = sum / k;
    report.bias = report.mean_theta - truth.value;
    report.rmse = std::sqrt(sum_sq / k);
    report.coverage = covered / k;
    report.mean_ci_length = length / k;
    report.mean_sigma_hat = sigma / k;
  }
  return report;
}

}  // namespace rieszdml
