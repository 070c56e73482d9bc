#pragma once

#include <cmath>
#include <functional>
#include <numbers>

#include <Eigen/Dense>

namespace rieszdml::testing {

/// Nodes and weights for E f(Z), Z ~ N(0, 1), from the Golub-Welsch
/// eigenproblem of the probabilists' Hermite Jacobi matrix. Weights sum to 1.
struct GaussHermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

inline GaussHermiteRule gauss_hermite(int order) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    J(k, k - 1) = std::sqrt(static_cast<double>(k));
    J(k - 1, k) = J(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
  GaussHermiteRule rule;
  rule.nodes = eig.eigenvalues();
  rule.weights = eig.eigenvectors().row(0).transpose().array().square();
  return rule;
}

inline double normal_expectation(const std::function<double(double)>& f, int order = 40) {
  const GaussHermiteRule rule = gauss_hermite(order);
  double sum = 0.0;
  for (int i = 0; i < order; ++i) sum += rule.weights(i) * f(rule.nodes(i));
  return sum;
}

}  // namespace rieszdml::testing
