#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "rieszdml/dataset.hpp"

namespace rieszdml {

/// A dictionary b: R^d -> R^p of basis functions with analytic gradients.
///
/// Basis ordering (fixed, so results are reproducible):
///  - polynomial: the constant first, then monomials grouped by total degree.
///    Without interactions the degree-k group is x_1^k, ..., x_d^k. With
///    interactions it holds every monomial of total degree k, ordered
///    lexicographically by exponent vector with x_1 most significant
///    (x_1^2, x_1 x_2, ..., x_2^2, ...).
///  - fourier: the constant, then for each order k = 1..K and each coordinate
///    j = 1..d the pair cos(k pi x_j), sin(k pi x_j). Inputs are expected to be
///    pre-scaled to [-1, 1]; nothing is rescaled internally.
///  - identity: b(x) = x (no constant).
///  - treatment_interacted: with D the 0/1 coordinate at treatment_index and
///    z the remaining coordinates, b(x) = (b_inner(z), D * b_inner(z)).
///    Gradients are taken with respect to z only; the treatment column of the
///    gradient is identically zero.
class Dictionary {
 public:
  struct Polynomial {
    int degree = 1;
    bool interactions = false;
  };
  struct Fourier {
    int order = 1;
  };
  struct Identity {};
  struct TreatmentInteracted {
    std::shared_ptr<const Dictionary> inner;
    std::size_t treatment_index = 0;
  };
  using Kind = std::variant<Polynomial, Fourier, Identity, TreatmentInteracted>;

  Dictionary(Kind kind, std::size_t input_dim);
  /// Fails unless output_dim is the one implied by (kind, input_dim).
  Dictionary(Kind kind, std::size_t input_dim, std::size_t output_dim);

  static Dictionary polynomial(std::size_t input_dim, int degree, bool interactions = false);
  static Dictionary fourier(std::size_t input_dim, int order);
  static Dictionary identity(std::size_t input_dim);
  static Dictionary treatment_interacted(Dictionary inner, std::size_t treatment_index = 0);

  static std::size_t output_dim_for(const Kind& kind, std::size_t input_dim);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept { return output_dim_; }
  const Kind& kind() const noexcept { return kind_; }
  std::optional<std::size_t> treatment_index() const noexcept;
  /// Exponent table (p x d) when every basis element is a monomial
  /// (polynomial and identity kinds).
  std::optional<Eigen::MatrixXi> monomial_exponents() const;
  std::string describe() const;

  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// p x d Jacobian, entry (j, k) = d b_j / d x_k.
  Eigen::MatrixXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// |rows| x p matrix whose i-th row is b(X_{rows[i]}).
  Eigen::MatrixXd design_matrix(const Dataset& data, std::span<const std::size_t> rows) const;

 private:
  void check_input(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  void evaluate_unchecked(const Eigen::Ref<const Eigen::VectorXd>& x,
                          Eigen::Ref<Eigen::VectorXd> out) const;
  void gradient_unchecked(const Eigen::Ref<const Eigen::VectorXd>& x,
                          Eigen::Ref<Eigen::MatrixXd> out) const;
  Eigen::VectorXd strip_treatment(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  Kind kind_;
  std::size_t input_dim_;
  std::size_t output_dim_;
  // Polynomial only: one row of exponents per basis element.
  Eigen::MatrixXi exponents_;
};

}  // namespace rieszdml
