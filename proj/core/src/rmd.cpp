#include "rieszdml/rmd.hpp"

#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "rieszdml/error.hpp"

namespace rieszdml {

RmdProblem::RmdProblem(Eigen::MatrixXd gram, Eigen::VectorXd moments, double lambda, double l1_bound)
    : gram_(std::move(gram)), moments_(std::move(moments)), lambda_(lambda), l1_bound_(l1_bound) {
  if (gram_.rows() != gram_.cols() || gram_.rows() != moments_.size() || moments_.size() == 0) {
    throw DimensionError("rmd: gram must be p x p and moments length p");
  }
  if (!gram_.allFinite() || !moments_.allFinite() || !std::isfinite(lambda_)) {
    throw InvalidArgument("rmd: non-finite problem data");
  }
  if (lambda_ < 0.0) throw InvalidArgument("rmd: lambda must be non-negative");
  if (std::isnan(l1_bound_) || l1_bound_ <= 0.0) throw InvalidArgument("rmd: l1 bound must be positive");
  const double asym = (gram_ - gram_.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, gram_.cwiseAbs().maxCoeff());
  if (asym > 1e-6 * scale) throw InvalidArgument("rmd: gram matrix is not symmetric");
  gram_ = 0.5 * (gram_ + gram_.transpose()).eval();
}

double RmdProblem::max_residual(const Eigen::Ref<const Eigen::VectorXd>& t) const {
  if (t.size() != moments_.size()) throw DimensionError("rmd: coefficient length mismatch");
  return (gram_ * t - moments_).cwiseAbs().maxCoeff();
}

const char* to_string(RmdStatus s) noexcept {
  switch (s) {
    case RmdStatus::optimal: return "optimal";
    case RmdStatus::infeasible: return "infeasible";
    case RmdStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

RmdSolution solve_rmd(const RmdProblem& problem, const RmdOptions& opts) {
  const auto p = static_cast<Eigen::Index>(problem.dim());
  const Eigen::MatrixXd& G = problem.gram();
  const Eigen::VectorXd& M = problem.moments();
  const double lambda = problem.lambda();
  const bool bounded = std::isfinite(problem.l1_bound());

  RmdSolution sol;
  if (M.cwiseAbs().maxCoeff() <= lambda) {
    // t = 0 is feasible and has the smallest possible norm.
    sol.t = Eigen::VectorXd::Zero(p);
    sol.max_residual = problem.max_residual(sol.t);
    sol.status = RmdStatus::optimal;
    return sol;
  }

  // Variables (t+, t-) >= 0:
  //    G t+ - G t- <= M + lambda
  //   -G t+ + G t- <= lambda - M
  //    1't+ + 1't- <= B            (only when B is finite)
  lp::InequalityLp lp;
  const Eigen::Index rows = 2 * p + (bounded ? 1 : 0);
  lp.A.resize(rows, 2 * p);
  lp.A.topLeftCorner(p, p) = G;
  lp.A.block(0, p, p, p) = -G;
  lp.A.block(p, 0, p, p) = -G;
  lp.A.block(p, p, p, p) = G;
  lp.b.resize(rows);
  lp.b.head(p) = M.array() + lambda;
  lp.b.segment(p, p) = lambda - M.array();
  if (bounded) {
    lp.A.row(2 * p).setOnes();
    lp.b(2 * p) = problem.l1_bound();
  }
  lp.c = Eigen::VectorXd::Ones(2 * p);

  lp::LpOptions lp_opts;
  lp_opts.max_iters = opts.max_iters;
  lp_opts.rule = opts.pivot_rule;
  const lp::LpResult res = lp::solve(lp, lp_opts);

  sol.iterations = res.iterations;
  sol.t = res.x.head(p) - res.x.tail(p);
  sol.l1_norm = sol.t.lpNorm<1>();
  sol.max_residual = problem.max_residual(sol.t);
  switch (res.status) {
    case lp::LpStatus::optimal: sol.status = RmdStatus::optimal; break;
    case lp::LpStatus::infeasible: sol.status = RmdStatus::infeasible; break;
    case lp::LpStatus::iteration_limit: sol.status = RmdStatus::iteration_limit; break;
    case lp::LpStatus::unbounded:
      throw SolverError("rmd: linear program reported unbounded (objective is bounded below by 0)", 0, false);
  }
  if (sol.status == RmdStatus::optimal) {
    const bool feasible = sol.max_residual <= lambda + opts.feas_tol &&
                          (!bounded || sol.l1_norm <= problem.l1_bound() + opts.feas_tol);
    if (!feasible) {
      throw SolverError("rmd: simplex solution failed the feasibility post-check (residual " +
                            std::to_string(sol.max_residual) + ", lambda " + std::to_string(lambda) + ")",
                        0, false);
    }
  }
  return sol;
}

LambdaRule::LambdaRule(std::variant<Fixed, GaussianQuantile> m) : method_(m) {
  if (const auto* f = std::get_if<Fixed>(&method_)) {
    if (!std::isfinite(f->value) || f->value < 0.0) throw InvalidArgument("lambda: fixed value must be finite and >= 0");
  } else {
    const auto& g = std::get<GaussianQuantile>(method_);
    if (!std::isfinite(g.c) || g.c < 0.0) throw InvalidArgument("lambda: c must be finite and >= 0");
    if (!(g.alpha > 0.0 && g.alpha < 1.0)) throw InvalidArgument("lambda: alpha must lie in (0, 1)");
  }
}

LambdaRule LambdaRule::scaled(double factor) const {
  if (!std::isfinite(factor) || factor < 0.0) throw InvalidArgument("lambda: scale must be finite and >= 0");
  LambdaRule r = *this;
  r.scale_ *= factor;
  return r;
}

double LambdaRule::value(std::size_t p, std::size_t sample_size) const {
  if (const auto* f = std::get_if<Fixed>(&method_)) return scale_ * f->value;
  if (p == 0 || sample_size == 0) throw InvalidArgument("lambda: p and sample size must be positive");
  const auto& g = std::get<GaussianQuantile>(method_);
  const boost::math::normal standard;
  const double tail = g.alpha / (2.0 * static_cast<double>(p));
  const double z = boost::math::quantile(boost::math::complement(standard, tail));
  return scale_ * g.c * z / std::sqrt(static_cast<double>(sample_size));
}

RmdProblem blp_problem(const Eigen::Ref<const Eigen::MatrixXd>& design,
                       const Eigen::Ref<const Eigen::VectorXd>& outcome, double lambda, double l1_bound) {
  if (design.rows() != outcome.size() || design.rows() == 0) throw DimensionError("blp: design/outcome mismatch");
  const double n = static_cast<double>(design.rows());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(design.cols(), design.cols());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(design.transpose(), 1.0 / n);
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  Eigen::VectorXd moments = design.transpose() * outcome / n;
  return RmdProblem(std::move(gram), std::move(moments), lambda, l1_bound);
}

RmdProblem riesz_problem(const Eigen::Ref<const Eigen::MatrixXd>& design,
                         const Eigen::Ref<const Eigen::MatrixXd>& m_rows, double lambda, double l1_bound) {
  if (design.rows() != m_rows.rows() || design.cols() != m_rows.cols() || design.rows() == 0) {
    throw DimensionError("riesz: design/m matrix mismatch");
  }
  const double n = static_cast<double>(design.rows());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(design.cols(), design.cols());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(design.transpose(), 1.0 / n);
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  Eigen::VectorXd moments = m_rows.colwise().mean().transpose();
  return RmdProblem(std::move(gram), std::move(moments), lambda, l1_bound);
}

namespace {

NuisanceFit fit(const RmdProblem& problem, const RmdOptions& opts, std::size_t sample_size) {
  NuisanceFit out;
  out.solution = solve_rmd(problem, opts);
  out.coef = out.solution.t;
  out.lambda = problem.lambda();
  out.sample_size = sample_size;
  return out;
}

}  // namespace

NuisanceFit estimate_blp(const Dataset& data, std::span<const std::size_t> rows, const Dictionary& dict,
                         const LambdaRule& rule, double l1_bound, const RmdOptions& opts) {
  if (rows.size() < 2) throw InvalidArgument("estimate_blp: need at least 2 rows");
  const Eigen::MatrixXd design = dict.design_matrix(data, rows);
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) y(static_cast<Eigen::Index>(i)) = data.y(rows[i]);
  const double lambda = rule.value(dict.output_dim(), rows.size());
  return fit(blp_problem(design, y, lambda, l1_bound), opts, rows.size());
}

NuisanceFit estimate_riesz(const Dataset& data, std::span<const std::size_t> rows, const Dictionary& dict,
                           const Functional& f, const LambdaRule& rule, double l1_bound,
                           const RmdOptions& opts) {
  if (rows.size() < 2) throw InvalidArgument("estimate_riesz: need at least 2 rows");
  const Eigen::MatrixXd design = dict.design_matrix(data, rows);
  const Eigen::MatrixXd m_rows = m_matrix(f, dict, data, rows);
  const double lambda = rule.value(dict.output_dim(), rows.size());
  return fit(riesz_problem(design, m_rows, lambda, l1_bound), opts, rows.size());
}

}  // namespace rieszdml
