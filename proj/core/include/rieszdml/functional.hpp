#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "rieszdml/dataset.hpp"
#include "rieszdml/dictionary.hpp"

namespace rieszdml {

/// theta = E a' grad gamma(X).
struct AverageDerivative {
  Eigen::VectorXd direction;
};

/// theta = E[gamma(S X + c) - gamma(X)]. The transport must keep X inside
/// the region where the dictionary is meaningful; that is not checked.
struct PolicyShift {
  Eigen::MatrixXd transport_matrix;
  Eigen::VectorXd transport_shift;
};

/// theta = E[gamma(1, Z) - gamma(0, Z)] for the 0/1 covariate at treatment_col.
struct AverageTreatmentEffect {
  std::size_t treatment_col = 0;
};

/// A linear functional gamma -> m(x, gamma), evaluated on dictionary elements.
class Functional {
 public:
  using Variant = std::variant<AverageDerivative, PolicyShift, AverageTreatmentEffect>;

  explicit Functional(Variant v);

  static Functional average_derivative(Eigen::VectorXd direction);
  static Functional policy_shift(Eigen::MatrixXd transport_matrix, Eigen::VectorXd transport_shift);
  static Functional average_treatment_effect(std::size_t treatment_col);

  const Variant& variant() const noexcept { return v_; }
  std::string name() const;

  /// Throws IncompatibleError/DimensionError unless this functional can be
  /// applied to `dict` (and, when given, `data`).
  void check_compatible(const Dictionary& dict) const;
  void check_compatible(const Dictionary& dict, const Dataset& data) const;

 private:
  Variant v_;
};

/// (m(x, b_1), ..., m(x, b_p)).
Eigen::VectorXd m_of_basis(const Functional& f, const Dictionary& dict,
                           const Eigen::Ref<const Eigen::VectorXd>& x);

/// Average of m_of_basis over `rows`.
Eigen::VectorXd m_hat_vector(const Functional& f, const Dictionary& dict, const Dataset& data,
                             std::span<const std::size_t> rows);

/// |rows| x p matrix with row i equal to m_of_basis at X_{rows[i]}.
Eigen::MatrixXd m_matrix(const Functional& f, const Dictionary& dict, const Dataset& data,
                         std::span<const std::size_t> rows);

/// m(x, b' beta) = m_of_basis(x)' beta.
double m_of_gamma(const Functional& f, const Dictionary& dict,
                  const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& beta);

}  // namespace rieszdml
