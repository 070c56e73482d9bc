#include "rieszdml/functional.hpp"

#include "rieszdml/error.hpp"

namespace rieszdml {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Eigen::VectorXd m_of_basis_unchecked(const Functional& f, const Dictionary& dict,
                                     const Eigen::Ref<const Eigen::VectorXd>& x) {
  return std::visit(
      overloaded{
          [&](const AverageDerivative& a) -> Eigen::VectorXd { return dict.gradient(x) * a.direction; },
          [&](const PolicyShift& s) -> Eigen::VectorXd {
            const Eigen::VectorXd moved = s.transport_matrix * x + s.transport_shift;
            return dict.evaluate(moved) - dict.evaluate(x);
          },
          [&](const AverageTreatmentEffect& t) -> Eigen::VectorXd {
            Eigen::VectorXd treated = x;
            Eigen::VectorXd control = x;
            treated(static_cast<Eigen::Index>(t.treatment_col)) = 1.0;
            control(static_cast<Eigen::Index>(t.treatment_col)) = 0.0;
            return dict.evaluate(treated) - dict.evaluate(control);
          },
      },
      f.variant());
}

}  // namespace

Functional::Functional(Variant v) : v_(std::move(v)) {
  std::visit(overloaded{
                 [](const AverageDerivative& a) {
                   if (a.direction.size() == 0 || !a.direction.allFinite() || a.direction.norm() <= 0.0) {
                     throw InvalidArgument("functional: average derivative direction must be finite and non-zero");
                   }
                 },
                 [](const PolicyShift& s) {
                   if (s.transport_matrix.rows() != s.transport_matrix.cols() ||
                       s.transport_matrix.rows() != s.transport_shift.size() || s.transport_shift.size() == 0) {
                     throw DimensionError("functional: transport needs a d x d matrix and a d-vector");
                   }
                   if (!s.transport_matrix.allFinite() || !s.transport_shift.allFinite()) {
                     throw InvalidArgument("functional: non-finite transport");
                   }
                 },
                 [](const AverageTreatmentEffect&) {},
             },
             v_);
}

Functional Functional::average_derivative(Eigen::VectorXd direction) {
  return Functional(AverageDerivative{std::move(direction)});
}

Functional Functional::policy_shift(Eigen::MatrixXd transport_matrix, Eigen::VectorXd transport_shift) {
  return Functional(PolicyShift{std::move(transport_matrix), std::move(transport_shift)});
}

Functional Functional::average_treatment_effect(std::size_t treatment_col) {
  return Functional(AverageTreatmentEffect{treatment_col});
}

std::string Functional::name() const {
  return std::visit(overloaded{
                        [](const AverageDerivative&) { return std::string("average_derivative"); },
                        [](const PolicyShift&) { return std::string("policy_shift"); },
                        [](const AverageTreatmentEffect&) { return std::string("ate"); },
                    },
                    v_);
}

void Functional::check_compatible(const Dictionary& dict) const {
  const auto d = static_cast<Eigen::Index>(dict.input_dim());
  std::visit(
      overloaded{
          [&](const AverageDerivative& a) {
            if (a.direction.size() != d) throw DimensionError("functional: direction length != input_dim");
            if (const auto t = dict.treatment_index()) {
              if (a.direction(static_cast<Eigen::Index>(*t)) != 0.0) {
                throw IncompatibleError(
                    "functional: derivative direction touches the treatment coordinate of a "
                    "treatment_interacted dictionary");
              }
            }
          },
          [&](const PolicyShift& s) {
            if (s.transport_shift.size() != d) throw DimensionError("functional: transport dimension != input_dim");
          },
          [&](const AverageTreatmentEffect& t) {
            const auto idx = dict.treatment_index();
            if (!idx) throw IncompatibleError("functional: ate requires a treatment_interacted dictionary");
            if (*idx != t.treatment_col) {
              throw IncompatibleError("functional: ate treatment column differs from the dictionary's");
            }
          },
      },
      v_);
}

void Functional::check_compatible(const Dictionary& dict, const Dataset& data) const {
  check_compatible(dict);
  if (data.dim() != dict.input_dim()) throw DimensionError("functional: dataset/dictionary dimension mismatch");
  if (const auto* t = std::get_if<AverageTreatmentEffect>(&v_)) {
    if (data.treatment_col() != t->treatment_col) {
      throw IncompatibleError("functional: ate requires the dataset's treatment column to be set and to match");
    }
  }
}

Eigen::VectorXd m_of_basis(const Functional& f, const Dictionary& dict,
                           const Eigen::Ref<const Eigen::VectorXd>& x) {
  f.check_compatible(dict);
  return m_of_basis_unchecked(f, dict, x);
}

Eigen::MatrixXd m_matrix(const Functional& f, const Dictionary& dict, const Dataset& data,
                         std::span<const std::size_t> rows) {
  if (rows.empty()) throw InvalidArgument("m_matrix: empty index set");
  f.check_compatible(dict, data);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dict.output_dim()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= data.size()) throw DimensionError("m_matrix: row index out of range");
    out.row(static_cast<Eigen::Index>(i)) = m_of_basis_unchecked(f, dict, data.x(rows[i])).transpose();
  }
  return out;
}

Eigen::VectorXd m_hat_vector(const Functional& f, const Dictionary& dict, const Dataset& data,
                             std::span<const std::size_t> rows) {
  if (rows.empty()) throw InvalidArgument("m_hat_vector: empty index set");
  return m_matrix(f, dict, data, rows).colwise().mean().transpose();
}

double m_of_gamma(const Functional& f, const Dictionary& dict, const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& beta) {
  if (static_cast<std::size_t>(beta.size()) != dict.output_dim()) {
    throw DimensionError("m_of_gamma: coefficient length != output_dim");
  }
  return m_of_basis(f, dict, x).dot(beta);
}

}  // namespace rieszdml
