#include "rieszdml/dictionary.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "rieszdml/error.hpp"

namespace rieszdml {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Exponent vectors summing to `remaining` over coordinates [j, d), x_j most
// significant and larger exponents first.
void monomials_of_degree(std::size_t j, int remaining, std::vector<int>& current,
                         std::vector<std::vector<int>>& out) {
  const std::size_t d = current.size();
  if (j + 1 == d) {
    current[j] = remaining;
    out.push_back(current);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current[j] = e;
    monomials_of_degree(j + 1, remaining - e, current, out);
  }
  current[j] = 0;
}

Eigen::MatrixXi polynomial_exponents(std::size_t d, int degree, bool interactions) {
  std::vector<std::vector<int>> terms;
  terms.emplace_back(d, 0);
  for (int k = 1; k <= degree; ++k) {
    if (interactions) {
      std::vector<int> current(d, 0);
      monomials_of_degree(0, k, current, terms);
    } else {
      for (std::size_t j = 0; j < d; ++j) {
        std::vector<int> e(d, 0);
        e[j] = k;
        terms.push_back(std::move(e));
      }
    }
  }
  Eigen::MatrixXi out(static_cast<Eigen::Index>(terms.size()), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < terms.size(); ++r)
    for (std::size_t c = 0; c < d; ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = terms[r][c];
  return out;
}

}  // namespace

std::size_t Dictionary::output_dim_for(const Kind& kind, std::size_t d) {
  if (d == 0) throw InvalidArgument("dictionary: input dimension must be positive");
  return std::visit(
      overloaded{
          [d](const Polynomial& k) -> std::size_t {
            if (k.degree < 0) throw InvalidArgument("dictionary: polynomial degree must be >= 0");
            const auto deg = static_cast<std::size_t>(k.degree);
            return k.interactions ? binomial(d + deg, deg) : 1 + d * deg;
          },
          [d](const Fourier& k) -> std::size_t {
            if (k.order < 1) throw InvalidArgument("dictionary: fourier order must be >= 1");
            return 1 + 2 * d * static_cast<std::size_t>(k.order);
          },
          [d](const Identity&) -> std::size_t { return d; },
          [d](const TreatmentInteracted& k) -> std::size_t {
            if (!k.inner) throw InvalidArgument("dictionary: treatment_interacted needs an inner dictionary");
            if (k.inner->treatment_index())
              throw InvalidArgument("dictionary: treatment_interacted dictionaries do not nest");
            if (d < 2 || k.inner->input_dim() != d - 1)
              throw DimensionError("dictionary: treatment_interacted input must be 1 + inner input_dim");
            if (k.treatment_index >= d)
              throw DimensionError("dictionary: treatment index out of range");
            return 2 * k.inner->output_dim();
          },
      },
      kind);
}

Dictionary::Dictionary(Kind kind, std::size_t input_dim)
    : kind_(std::move(kind)), input_dim_(input_dim), output_dim_(output_dim_for(kind_, input_dim)) {
  if (const auto* poly = std::get_if<Polynomial>(&kind_)) {
    exponents_ = polynomial_exponents(input_dim_, poly->degree, poly->interactions);
  }
}

Dictionary::Dictionary(Kind kind, std::size_t input_dim, std::size_t output_dim)
    : Dictionary(std::move(kind), input_dim) {
  if (output_dim != output_dim_) {
    throw DimensionError("dictionary: output_dim " + std::to_string(output_dim) +
                         " inconsistent with kind (expected " + std::to_string(output_dim_) + ")");
  }
}

Dictionary Dictionary::polynomial(std::size_t input_dim, int degree, bool interactions) {
  return Dictionary(Polynomial{degree, interactions}, input_dim);
}

Dictionary Dictionary::fourier(std::size_t input_dim, int order) {
  return Dictionary(Fourier{order}, input_dim);
}

Dictionary Dictionary::identity(std::size_t input_dim) { return Dictionary(Identity{}, input_dim); }

Dictionary Dictionary::treatment_interacted(Dictionary inner, std::size_t treatment_index) {
  const std::size_t d = inner.input_dim() + 1;
  return Dictionary(
      TreatmentInteracted{std::make_shared<const Dictionary>(std::move(inner)), treatment_index}, d);
}

std::optional<std::size_t> Dictionary::treatment_index() const noexcept {
  if (const auto* t = std::get_if<TreatmentInteracted>(&kind_)) return t->treatment_index;
  return std::nullopt;
}

std::optional<Eigen::MatrixXi> Dictionary::monomial_exponents() const {
  if (std::holds_alternative<Polynomial>(kind_)) return exponents_;
  if (std::holds_alternative<Identity>(kind_)) {
    return Eigen::MatrixXi::Identity(static_cast<Eigen::Index>(input_dim_), static_cast<Eigen::Index>(input_dim_));
  }
  return std::nullopt;
}

std::string Dictionary::describe() const {
  return std::visit(
      overloaded{
          [](const Polynomial& k) {
            return "polynomial(degree=" + std::to_string(k.degree) +
                   (k.interactions ? ", interactions)" : ")");
          },
          [](const Fourier& k) { return "fourier(order=" + std::to_string(k.order) + ")"; },
          [](const Identity&) { return std::string("identity"); },
          [](const TreatmentInteracted& k) {
            return "treatment_interacted(" + k.inner->describe() +
                   ", treatment_index=" + std::to_string(k.treatment_index) + ")";
          },
      },
      kind_);
}

void Dictionary::check_input(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (static_cast<std::size_t>(x.size()) != input_dim_) {
    throw DimensionError("dictionary: input has length " + std::to_string(x.size()) +
                         ", expected " + std::to_string(input_dim_));
  }
  if (!x.allFinite()) throw InvalidArgument("dictionary: non-finite input");
}

Eigen::VectorXd Dictionary::strip_treatment(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const auto t = static_cast<Eigen::Index>(*treatment_index());
  Eigen::VectorXd z(x.size() - 1);
  z.head(t) = x.head(t);
  z.tail(x.size() - 1 - t) = x.tail(x.size() - 1 - t);
  return z;
}

Eigen::VectorXd Dictionary::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_input(x);
  Eigen::VectorXd out(static_cast<Eigen::Index>(output_dim_));
  evaluate_unchecked(x, out);
  return out;
}

void Dictionary::evaluate_unchecked(const Eigen::Ref<const Eigen::VectorXd>& x,
                                    Eigen::Ref<Eigen::VectorXd> out) const {
  const auto d = static_cast<Eigen::Index>(input_dim_);
  std::visit(
      overloaded{
          [&](const Polynomial& k) {
            // powers(j, e) = x_j^e
            Eigen::MatrixXd powers(d, k.degree + 1);
            for (Eigen::Index j = 0; j < d; ++j) {
              powers(j, 0) = 1.0;
              for (int e = 1; e <= k.degree; ++e) powers(j, e) = powers(j, e - 1) * x(j);
            }
            for (Eigen::Index r = 0; r < exponents_.rows(); ++r) {
              double v = 1.0;
              for (Eigen::Index j = 0; j < d; ++j) {
                const int e = exponents_(r, j);
                if (e != 0) v *= powers(j, e);
              }
              out(r) = v;
            }
          },
          [&](const Fourier& k) {
            out(0) = 1.0;
            Eigen::Index r = 1;
            for (int order = 1; order <= k.order; ++order) {
              for (Eigen::Index j = 0; j < d; ++j) {
                const double arg = order * std::numbers::pi * x(j);
                out(r++) = std::cos(arg);
                out(r++) = std::sin(arg);
              }
            }
          },
          [&](const Identity&) { out = x; },
          [&](const TreatmentInteracted& k) {
            const double treat = x(static_cast<Eigen::Index>(k.treatment_index));
            const auto q = static_cast<Eigen::Index>(k.inner->output_dim());
            k.inner->evaluate_unchecked(strip_treatment(x), out.head(q));
            out.tail(q) = treat * out.head(q);
          },
      },
      kind_);
}

Eigen::MatrixXd Dictionary::gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_input(x);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(output_dim_), static_cast<Eigen::Index>(input_dim_));
  gradient_unchecked(x, out);
  return out;
}

void Dictionary::gradient_unchecked(const Eigen::Ref<const Eigen::VectorXd>& x,
                                    Eigen::Ref<Eigen::MatrixXd> out) const {
  const auto d = static_cast<Eigen::Index>(input_dim_);
  out.setZero();
  std::visit(
      overloaded{
          [&](const Polynomial& k) {
            Eigen::MatrixXd powers(d, k.degree + 1);
            for (Eigen::Index j = 0; j < d; ++j) {
              powers(j, 0) = 1.0;
              for (int e = 1; e <= k.degree; ++e) powers(j, e) = powers(j, e - 1) * x(j);
            }
            for (Eigen::Index r = 0; r < exponents_.rows(); ++r) {
              for (Eigen::Index c = 0; c < d; ++c) {
                const int ec = exponents_(r, c);
                if (ec == 0) continue;
                double v = ec * powers(c, ec - 1);
                for (Eigen::Index j = 0; j < d; ++j) {
                  if (j != c && exponents_(r, j) != 0) v *= powers(j, exponents_(r, j));
                }
                out(r, c) = v;
              }
            }
          },
          [&](const Fourier& k) {
            Eigen::Index r = 1;
            for (int order = 1; order <= k.order; ++order) {
              const double w = order * std::numbers::pi;
              for (Eigen::Index j = 0; j < d; ++j) {
                out(r++, j) = -w * std::sin(w * x(j));
                out(r++, j) = w * std::cos(w * x(j));
              }
            }
          },
          [&](const Identity&) { out.setIdentity(); },
          [&](const TreatmentInteracted& k) {
            const auto t = static_cast<Eigen::Index>(k.treatment_index);
            const double treat = x(t);
            const auto q = static_cast<Eigen::Index>(k.inner->output_dim());
            Eigen::MatrixXd inner(q, d - 1);
            k.inner->gradient_unchecked(strip_treatment(x), inner);
            for (Eigen::Index c = 0; c < d - 1; ++c) {
              const Eigen::Index col = c < t ? c : c + 1;
              out.col(col).head(q) = inner.col(c);
              out.col(col).tail(q) = treat * inner.col(c);
            }
          },
      },
      kind_);
}

Eigen::MatrixXd Dictionary::design_matrix(const Dataset& data, std::span<const std::size_t> rows) const {
  if (rows.empty()) throw InvalidArgument("design_matrix: empty index set");
  if (data.dim() != input_dim_) {
    throw DimensionError("design_matrix: dataset has " + std::to_string(data.dim()) +
                         " covariates, dictionary expects " + std::to_string(input_dim_));
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(output_dim_));
  Eigen::VectorXd buffer(static_cast<Eigen::Index>(output_dim_));
  const auto& x = data.covariates();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= data.size()) throw DimensionError("design_matrix: row index out of range");
    evaluate_unchecked(x.row(static_cast<Eigen::Index>(rows[i])).transpose(), buffer);
    out.row(static_cast<Eigen::Index>(i)) = buffer.transpose();
  }
  return out;
}

}  // namespace rieszdml
