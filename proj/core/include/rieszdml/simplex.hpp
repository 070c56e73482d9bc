#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace rieszdml::lp {

enum class PivotRule {
  /// Smallest-index entering and leaving variables. Never cycles.
  bland,
  /// Most negative reduced cost; falls back to Bland's rule during runs of
  /// degenerate pivots so it cannot cycle either.
  dantzig,
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

const char* to_string(LpStatus s) noexcept;

struct LpOptions {
  std::size_t max_iters = 100000;
  PivotRule rule = PivotRule::bland;
  double primal_tol = 1e-9;
  double dual_tol = 1e-10;
  double pivot_tol = 1e-9;
  std::size_t refactor_every = 50;
  std::size_t degenerate_streak_limit = 30;
};

/// minimize c'x subject to A x <= b, x >= 0.
struct InequalityLp {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
};

struct LpResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  LpStatus status = LpStatus::iteration_limit;
  std::size_t iterations = 0;
};

/// Two-phase dense revised simplex. The basis inverse is kept explicitly,
/// updated by rank-one eta transforms and refactorized periodically.
LpResult solve(const InequalityLp& lp, const LpOptions& opts = {});

}  // namespace rieszdml::lp
