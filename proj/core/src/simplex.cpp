#include "rieszdml/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rieszdml/error.hpp"

namespace rieszdml::lp {

const char* to_string(LpStatus s) noexcept {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

using Eigen::Index;

class RevisedSimplex {
 public:
  RevisedSimplex(const InequalityLp& lp, const LpOptions& opts) : opts_(opts) {
    m_ = lp.A.rows();
    n_ = lp.A.cols();
    std::vector<Index> flipped;
    for (Index i = 0; i < m_; ++i)
      if (lp.b(i) < 0.0) flipped.push_back(i);
    n_art_ = static_cast<Index>(flipped.size());
    total_ = n_ + m_ + n_art_;

    // Columns: structural | slack | artificial. Rows with negative rhs are
    // negated so that the right-hand side is non-negative.
    A_.setZero(m_, total_);
    A_.leftCols(n_) = lp.A;
    rhs_ = lp.b;
    A_.block(0, n_, m_, m_).setIdentity();
    for (Index k = 0; k < n_art_; ++k) {
      const Index i = flipped[static_cast<std::size_t>(k)];
      A_.row(i) *= -1.0;
      rhs_(i) = -rhs_(i);
      A_(i, n_ + m_ + k) = 1.0;
    }
    cost_ = Eigen::VectorXd::Zero(total_);
    cost_.head(n_) = lp.c;

    basis_.resize(static_cast<std::size_t>(m_));
    is_basic_.assign(static_cast<std::size_t>(total_), false);
    for (Index i = 0; i < m_; ++i) basis_[static_cast<std::size_t>(i)] = n_ + i;
    for (Index k = 0; k < n_art_; ++k) basis_[static_cast<std::size_t>(flipped[static_cast<std::size_t>(k)])] = n_ + m_ + k;
    for (Index j : basis_) is_basic_[static_cast<std::size_t>(j)] = true;
    binv_.setIdentity(m_, m_);
    xb_ = rhs_;
  }

  LpResult run() {
    LpResult result;
    if (n_art_ > 0) {
      Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(total_);
      phase1.tail(n_art_).setOnes();
      const auto status = iterate(phase1, /*allow_artificial=*/true);
      if (status == LpStatus::iteration_limit) return finish(LpStatus::iteration_limit);
      refactor();
      double infeasibility = 0.0;
      for (Index i = 0; i < m_; ++i)
        if (is_artificial(basis_[static_cast<std::size_t>(i)])) infeasibility += std::max(xb_(i), 0.0);
      const double scale = std::max(1.0, rhs_.cwiseAbs().maxCoeff());
      if (infeasibility > 1e3 * opts_.primal_tol * scale) return finish(LpStatus::infeasible);
      drive_out_artificials();
    }
    const auto status = iterate(cost_, /*allow_artificial=*/false);
    refactor();
    return finish(status);
  }

 private:
  bool is_artificial(Index j) const { return j >= n_ + m_; }

  LpResult finish(LpStatus status) const {
    LpResult r;
    r.status = status;
    r.iterations = iterations_;
    r.x = Eigen::VectorXd::Zero(n_);
    for (Index i = 0; i < m_; ++i) {
      const Index j = basis_[static_cast<std::size_t>(i)];
      if (j < n_) r.x(j) = std::max(xb_(i), 0.0);
    }
    r.objective = cost_.head(n_).dot(r.x);
    return r;
  }

  void refactor() {
    Eigen::MatrixXd B(m_, m_);
    for (Index i = 0; i < m_; ++i) B.col(i) = A_.col(basis_[static_cast<std::size_t>(i)]);
    binv_ = B.partialPivLu().inverse();
    xb_ = binv_ * rhs_;
    since_refactor_ = 0;
  }

  void pivot(Index row, Index entering, const Eigen::VectorXd& w) {
    const double wr = w(row);
    const double step = xb_(row) / wr;
    xb_ -= step * w;
    xb_(row) = step;
    const Eigen::RowVectorXd pivot_row = binv_.row(row) / wr;
    binv_ -= w * pivot_row;
    binv_.row(row) = pivot_row;
    is_basic_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(row)])] = false;
    basis_[static_cast<std::size_t>(row)] = entering;
    is_basic_[static_cast<std::size_t>(entering)] = true;
    if (++since_refactor_ >= opts_.refactor_every) refactor();
  }

  Index ratio_test(const Eigen::VectorXd& w, bool use_bland, double& best_ratio) const {
    Index leave = -1;
    best_ratio = std::numeric_limits<double>::infinity();
    const double threshold = opts_.pivot_tol * std::max(1.0, w.cwiseAbs().maxCoeff());
    for (Index i = 0; i < m_; ++i) {
      if (w(i) <= threshold) continue;
      const double ratio = std::max(xb_(i), 0.0) / w(i);
      if (leave < 0 || ratio < best_ratio - opts_.primal_tol) {
        leave = i;
        best_ratio = ratio;
      } else if (ratio <= best_ratio + opts_.primal_tol) {
        // Tie: Bland wants the smallest basic index; otherwise prefer the
        // larger pivot element.
        const bool take = use_bland ? basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)]
                                    : w(i) > w(leave);
        if (take) {
          leave = i;
          best_ratio = std::min(best_ratio, ratio);
        }
      }
    }
    return leave;
  }

  LpStatus iterate(const Eigen::VectorXd& cost, bool allow_artificial) {
    std::size_t degenerate_streak = 0;
    Eigen::VectorXd cb(m_);
    for (;;) {
      if (iterations_ >= opts_.max_iters) return LpStatus::iteration_limit;
      for (Index i = 0; i < m_; ++i) cb(i) = cost(basis_[static_cast<std::size_t>(i)]);
      const Eigen::VectorXd y = binv_.transpose() * cb;
      const Eigen::VectorXd reduced = cost - A_.transpose() * y;

      const bool use_bland =
          opts_.rule == PivotRule::bland || degenerate_streak >= opts_.degenerate_streak_limit;
      const Index limit = allow_artificial ? total_ : n_ + m_;
      std::vector<Index> candidates;
      for (Index j = 0; j < limit; ++j) {
        if (!is_basic_[static_cast<std::size_t>(j)] && reduced(j) < -opts_.dual_tol) candidates.push_back(j);
      }
      if (!use_bland) {
        std::stable_sort(candidates.begin(), candidates.end(),
                         [&](Index a, Index b) { return reduced(a) < reduced(b); });
      }
      if (candidates.empty()) {
        // Only trust optimality when priced against a fresh factorization.
        if (since_refactor_ == 0) return LpStatus::optimal;
        refactor();
        continue;
      }

      Index entering = -1;
      Index leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      Eigen::VectorXd w;
      bool ray = false;
      for (const Index j : candidates) {
        w = binv_ * A_.col(j);
        leave = ratio_test(w, use_bland, best_ratio);
        if (leave >= 0) {
          entering = j;
          break;
        }
        // A column with no positive pivot is an unbounded ray only when its
        // reduced cost is clearly negative; otherwise it is roundoff.
        if (reduced(j) < -std::sqrt(opts_.dual_tol)) ray = true;
      }
      if (entering < 0) {
        if (since_refactor_ != 0) {
          refactor();
          continue;
        }
        return ray ? LpStatus::unbounded : LpStatus::optimal;
      }

      degenerate_streak = best_ratio <= opts_.primal_tol ? degenerate_streak + 1 : 0;
      xb_(leave) = std::max(xb_(leave), 0.0);
      pivot(leave, entering, w);
      ++iterations_;
    }
  }

  void drive_out_artificials() {
    for (Index r = 0; r < m_; ++r) {
      if (!is_artificial(basis_[static_cast<std::size_t>(r)])) continue;
      const Eigen::RowVectorXd row = binv_.row(r) * A_.leftCols(n_ + m_);
      Index best = -1;
      double best_abs = 1e-7;
      for (Index j = 0; j < n_ + m_; ++j) {
        if (is_basic_[static_cast<std::size_t>(j)]) continue;
        if (std::abs(row(j)) > best_abs) {
          best = j;
          best_abs = std::abs(row(j));
        }
      }
      // No candidate: the row is redundant and the artificial stays basic at zero.
      if (best < 0) continue;
      xb_(r) = 0.0;
      const Eigen::VectorXd w = binv_ * A_.col(best);
      pivot(r, best, w);
    }
    refactor();
  }

  LpOptions opts_;
  Index m_ = 0, n_ = 0, n_art_ = 0, total_ = 0;
  Eigen::MatrixXd A_;
  Eigen::VectorXd rhs_, cost_, xb_;
  Eigen::MatrixXd binv_;
  std::vector<Index> basis_;
  std::vector<bool> is_basic_;
  std::size_t iterations_ = 0;
  std::size_t since_refactor_ = 0;
};

}  // namespace

LpResult solve(const InequalityLp& lp, const LpOptions& opts) {
  if (lp.A.rows() != lp.b.size() || lp.A.cols() != lp.c.size()) {
    throw DimensionError("lp: inconsistent problem dimensions");
  }
  if (!lp.A.allFinite() || !lp.b.allFinite() || !lp.c.allFinite()) {
    throw InvalidArgument("lp: non-finite problem data");
  }
  if (lp.A.rows() == 0) {
    LpResult r;
    r.x = Eigen::VectorXd::Zero(lp.c.size());
    r.status = (lp.c.array() < 0.0).any() ? LpStatus::unbounded : LpStatus::optimal;
    return r;
  }
  return RevisedSimplex(lp, opts).run();
}

}  // namespace rieszdml::lp
