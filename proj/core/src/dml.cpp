#include "rieszdml/dml.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "rieszdml/error.hpp"
#include "rieszdml/parallel.hpp"

namespace rieszdml {

CrossFitSplit::CrossFitSplit(std::vector<std::size_t> eval_rows, std::vector<std::size_t> train_rows)
    : eval_(std::move(eval_rows)), train_(std::move(train_rows)) {
  if (eval_.empty() || train_.empty()) throw InvalidArgument("cross-fit split: empty index set");
  std::vector<std::size_t> a = eval_;
  std::vector<std::size_t> b = train_;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::size_t> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  if (!common.empty()) {
    throw InvalidArgument("cross-fit split: evaluation and training rows overlap (row " +
                          std::to_string(common.front()) + ")");
  }
}

FoldPlan::FoldPlan(std::vector<std::size_t> assignments, std::size_t folds)
    : assignments_(std::move(assignments)), folds_(folds) {
  if (folds_ < 2) throw InvalidArgument("fold plan: need K >= 2 folds");
  std::vector<std::size_t> counts(folds_, 0);
  for (std::size_t a : assignments_) {
    if (a >= folds_) throw InvalidArgument("fold plan: fold id out of range");
    ++counts[a];
  }
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  if (*lo == 0) throw InvalidArgument("fold plan: empty fold");
  if (*hi - *lo > 1) throw InvalidArgument("fold plan: fold sizes differ by more than one");
}

FoldPlan FoldPlan::random(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw InvalidArgument("fold plan: need K >= 2 folds");
  if (n < folds) throw InvalidArgument("fold plan: fewer rows than folds");
  std::vector<std::size_t> order = all_rows(n);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> assignments(n);
  for (std::size_t pos = 0; pos < n; ++pos) assignments[order[pos]] = pos % folds;
  return FoldPlan(std::move(assignments), folds);
}

FoldPlan FoldPlan::from_assignments(std::vector<std::size_t> assignments, std::size_t folds) {
  return FoldPlan(std::move(assignments), folds);
}

std::vector<std::size_t> FoldPlan::fold_rows(std::size_t k) const {
  if (k >= folds_) throw InvalidArgument("fold plan: fold id out of range");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignments_.size(); ++i)
    if (assignments_[i] == k) rows.push_back(i);
  return rows;
}

CrossFitSplit FoldPlan::split(std::size_t k) const {
  if (k >= folds_) throw InvalidArgument("fold plan: fold id out of range");
  std::vector<std::size_t> eval;
  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < assignments_.size(); ++i) (assignments_[i] == k ? eval : train).push_back(i);
  return CrossFitSplit(std::move(eval), std::move(train));
}

namespace {

void check_coefficients(const Dictionary& dict, const Eigen::Ref<const Eigen::VectorXd>& beta,
                        const Eigen::Ref<const Eigen::VectorXd>& rho) {
  const auto p = static_cast<Eigen::Index>(dict.output_dim());
  if (beta.size() != p || rho.size() != p) throw DimensionError("score: coefficient length != output_dim");
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, std::span<const std::size_t> rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(rows[i]));
  return out;
}

bool within(double value, double lambda) { return !std::isfinite(lambda) || value <= 3.0 * lambda + 1e-12; }

}  // namespace

double score_psi(const Observation& w, double theta, const Eigen::Ref<const Eigen::VectorXd>& beta,
                 const Eigen::Ref<const Eigen::VectorXd>& rho, const Dictionary& dict, const Functional& f) {
  check_coefficients(dict, beta, rho);
  const Eigen::VectorXd b = dict.evaluate(w.x);
  const Eigen::VectorXd m = m_of_basis(f, dict, w.x);
  return theta - m.dot(beta) - rho.dot(b) * (w.y - b.dot(beta));
}

ScoreDerivatives score_derivatives(const Observation& w, double /*theta*/,
                                   const Eigen::Ref<const Eigen::VectorXd>& beta,
                                   const Eigen::Ref<const Eigen::VectorXd>& rho, const Dictionary& dict,
                                   const Functional& f) {
  check_coefficients(dict, beta, rho);
  const Eigen::VectorXd b = dict.evaluate(w.x);
  const Eigen::VectorXd m = m_of_basis(f, dict, w.x);
  return {-m + b * b.dot(rho), -b * (w.y - b.dot(beta))};
}

double fold_theta(const Dataset& data, std::span<const std::size_t> rows,
                  const Eigen::Ref<const Eigen::VectorXd>& beta, const Eigen::Ref<const Eigen::VectorXd>& rho,
                  const Dictionary& dict, const Functional& f) {
  if (rows.empty()) throw InvalidArgument("fold_theta: empty fold");
  check_coefficients(dict, beta, rho);
  const Eigen::MatrixXd design = dict.design_matrix(data, rows);
  const Eigen::MatrixXd m_rows = m_matrix(f, dict, data, rows);
  const Eigen::VectorXd y = gather(data.outcome(), rows);
  const Eigen::VectorXd fitted = design * beta;
  const Eigen::VectorXd terms = m_rows * beta + (design * rho).cwiseProduct(y - fitted);
  return terms.mean();
}

OrthogonalityReport orthogonality_report(const Dataset& data, std::span<const std::size_t> rows,
                                         const Dictionary& dict, const Functional& f,
                                         const Eigen::Ref<const Eigen::VectorXd>& beta,
                                         const Eigen::Ref<const Eigen::VectorXd>& rho, double lambda_blp,
                                         double lambda_riesz) {
  if (rows.empty()) throw InvalidArgument("orthogonality_report: empty index set");
  check_coefficients(dict, beta, rho);
  const Eigen::MatrixXd design = dict.design_matrix(data, rows);
  const Eigen::MatrixXd m_rows = m_matrix(f, dict, data, rows);
  const Eigen::VectorXd y = gather(data.outcome(), rows);
  const double n = static_cast<double>(rows.size());
  const Eigen::VectorXd d_beta = (-m_rows.colwise().sum().transpose() + design.transpose() * (design * rho)) / n;
  const Eigen::VectorXd d_rho = -design.transpose() * (y - design * beta) / n;
  OrthogonalityReport r;
  r.d_beta_sup = d_beta.cwiseAbs().maxCoeff();
  r.d_rho_sup = d_rho.cwiseAbs().maxCoeff();
  r.within_bounds = within(r.d_beta_sup, lambda_riesz) && within(r.d_rho_sup, lambda_blp);
  return r;
}

const char* to_string(DmlStatus s) noexcept {
  switch (s) {
    case DmlStatus::ok: return "ok";
    case DmlStatus::degenerate_variance: return "degenerate_variance";
  }
  return "unknown";
}

DmlResult dml_estimate(const Dataset& data, const Dictionary& dict, const Functional& f, const DmlOptions& opts) {
  if (opts.folds < 2) throw InvalidArgument("dml: need K >= 2 folds");
  if (data.size() < 2 * opts.folds) throw InvalidArgument("dml: need n >= 2K observations");
  return dml_estimate(data, dict, f, FoldPlan::random(data.size(), opts.folds, opts.seed), opts);
}

DmlResult dml_estimate(const Dataset& data, const Dictionary& dict, const Functional& f, const FoldPlan& plan,
                       const DmlOptions& opts) {
  f.check_compatible(dict, data);
  const std::size_t n = data.size();
  const std::size_t K = plan.folds();
  if (plan.size() != n) throw DimensionError("dml: fold plan size != sample size");
  if (n < 2 * K) throw InvalidArgument("dml: need n >= 2K observations");
  if (!(opts.alpha > 0.0 && opts.alpha < 1.0)) throw InvalidArgument("dml: alpha must lie in (0, 1)");

  const std::vector<std::size_t> rows = all_rows(n);
  const Eigen::MatrixXd design = dict.design_matrix(data, rows);
  const Eigen::MatrixXd m_rows = m_matrix(f, dict, data, rows);
  const Eigen::VectorXd& y = data.outcome();
  const std::size_t p = dict.output_dim();

  std::vector<FoldFit> fits(K);
  std::vector<CrossFitSplit> splits;
  splits.reserve(K);
  for (std::size_t k = 0; k < K; ++k) splits.push_back(plan.split(k));

  parallel_for(K, opts.threads, [&](std::size_t k) {
    const CrossFitSplit& split = splits[k];
    const auto train = split.train_rows();
    const Eigen::MatrixXd train_design = gather_rows(design, train);

    auto solve = [&](const RmdProblem& problem, const char* which) {
      NuisanceFit fit;
      try {
        fit.solution = solve_rmd(problem, opts.solver);
      } catch (const SolverError& e) {
        throw SolverError(std::string("fold ") + std::to_string(k) + " " + which + ": " + e.what(), k, false);
      }
      if (fit.solution.status != RmdStatus::optimal) {
        throw SolverError(std::string("fold ") + std::to_string(k) + " " + which + " fit is " +
                              to_string(fit.solution.status),
                          k, fit.solution.status == RmdStatus::infeasible);
      }
      fit.coef = fit.solution.t;
      fit.lambda = problem.lambda();
      fit.sample_size = train.size();
      return fit;
    };

    FoldFit& out = fits[k];
    out.fold = k;
    out.eval_size = split.eval_rows().size();
    const double lambda_blp = opts.blp_rule.value(p, train.size());
    out.blp = solve(blp_problem(train_design, gather(y, train), lambda_blp, opts.l1_bound), "regression");
    if (opts.riesz_correction) {
      const double lambda_riesz = opts.riesz_rule.value(p, train.size());
      out.riesz = solve(riesz_problem(train_design, gather_rows(m_rows, train), lambda_riesz, opts.l1_bound), "riesz");
    } else {
      out.riesz.coef = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
      out.riesz.solution.t = out.riesz.coef;
      out.riesz.solution.status = RmdStatus::optimal;
      out.riesz.sample_size = train.size();
    }

    const auto eval = split.eval_rows();
    const Eigen::MatrixXd eval_design = gather_rows(design, eval);
    const Eigen::VectorXd eval_y = gather(y, eval);
    const Eigen::VectorXd terms = gather_rows(m_rows, eval) * out.blp.coef +
                                  (eval_design * out.riesz.coef).cwiseProduct(eval_y - eval_design * out.blp.coef);
    out.theta = terms.mean();
  });

  DmlResult r;
  r.n = n;
  r.folds = K;
  r.alpha = opts.alpha;
  r.per_fold_theta.resize(K);
  for (std::size_t k = 0; k < K; ++k) r.per_fold_theta[k] = fits[k].theta;
  r.theta_hat = std::accumulate(r.per_fold_theta.begin(), r.per_fold_theta.end(), 0.0) / static_cast<double>(K);

  // Scores and score derivatives with each observation's out-of-fold nuisances.
  double sum_sq = 0.0;
  Eigen::VectorXd d_beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  Eigen::VectorXd d_rho = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  for (std::size_t k = 0; k < K; ++k) {
    const auto eval = splits[k].eval_rows();
    const Eigen::MatrixXd eval_design = gather_rows(design, eval);
    const Eigen::MatrixXd eval_m = gather_rows(m_rows, eval);
    const Eigen::VectorXd residual = gather(y, eval) - eval_design * fits[k].blp.coef;
    const Eigen::VectorXd alpha_hat = eval_design * fits[k].riesz.coef;
    const Eigen::VectorXd psi =
        (r.theta_hat - (eval_m * fits[k].blp.coef).array() - alpha_hat.cwiseProduct(residual).array()).matrix();
    sum_sq += psi.squaredNorm();
    d_beta += -eval_m.colwise().sum().transpose() + eval_design.transpose() * alpha_hat;
    d_rho += -eval_design.transpose() * residual;
    r.lambda_blp = std::max(r.lambda_blp, fits[k].blp.lambda);
    r.lambda_riesz = std::max(r.lambda_riesz, fits[k].riesz.lambda);
  }
  const double dn = static_cast<double>(n);
  r.sigma_hat = std::sqrt(sum_sq / dn);
  const boost::math::normal standard;
  const double z = boost::math::quantile(boost::math::complement(standard, opts.alpha / 2.0));
  const double half = z * r.sigma_hat / std::sqrt(dn);
  r.ci_lower = r.theta_hat - half;
  r.ci_upper = r.theta_hat + half;

  r.orthogonality.d_beta_sup = (d_beta / dn).cwiseAbs().maxCoeff();
  r.orthogonality.d_rho_sup = (d_rho / dn).cwiseAbs().maxCoeff();
  r.orthogonality.within_bounds = (!opts.riesz_correction || within(r.orthogonality.d_beta_sup, r.lambda_riesz)) &&
                                  within(r.orthogonality.d_rho_sup, r.lambda_blp);
  if (!r.orthogonality.within_bounds) {
    r.warnings.emplace_back("orthogonality diagnostic exceeds 3x the fitted lambda");
  }
  if (r.sigma_hat <= 1e-12 * std::max(1.0, std::abs(r.theta_hat))) {
    r.status = DmlStatus::degenerate_variance;
    r.warnings.emplace_back("score is constant across observations; confidence interval has zero width");
  }
  r.per_fold = std::move(fits);
  return r;
}

}  // namespace rieszdml
