#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cartan_cr/expr.hpp"
#include "cartan_cr/matrix.hpp"

namespace cartan_cr {

struct FormError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UndeclaredDifferential : FormError {
  std::string function;
  explicit UndeclaredDifferential(const std::string& f)
      : FormError("no declared differential for '" + f + "'"), function(f) {}
};

inline constexpr int kMaxFormDegree = 4;

// A basis one-form. An empty conjugate means the form is real.
struct BasisOneForm {
  std::string symbol;
  std::string conjugate;
};

class Basis {
 public:
  // `function_partners` lists complex auxiliary functions appearing in
  // coefficients together with their conjugates (both directions are added).
  Basis(std::vector<BasisOneForm> forms, ConjugateMap function_partners = {});

  std::size_t size() const { return forms_.size(); }
  const BasisOneForm& at(std::size_t k) const { return forms_[k]; }
  const std::string& symbol(std::size_t k) const { return forms_[k].symbol; }
  int index(const std::string& symbol) const;  // throws FormError
  std::optional<int> find(const std::string& symbol) const;
  int conjugate_index(std::size_t k) const { return conj_[k]; }
  bool is_real(std::size_t k) const { return conj_[k] == int(k); }
  const ConjugateMap& function_partners() const { return partners_; }

 private:
  std::vector<BasisOneForm> forms_;
  std::vector<int> conj_;
  std::map<std::string, int> lookup_;
  ConjugateMap partners_;
};

using BasisPtr = std::shared_ptr<const Basis>;
BasisPtr make_basis(std::vector<BasisOneForm> forms, ConjugateMap function_partners = {});

using Monomial = std::uint32_t;  // bit k set = basis form k present

class Form {
 public:
  Form() = default;
  Form(BasisPtr basis, int degree);

  static Form scalar(BasisPtr basis, const ScalarExpr& f);
  static Form basis_form(BasisPtr basis, const std::string& symbol, const ScalarExpr& coeff = ScalarExpr(1));
  // coeff * s1 ^ s2 ^ ... in the order given
  static Form monomial(BasisPtr basis, const std::vector<std::string>& symbols, const ScalarExpr& coeff = ScalarExpr(1));

  const BasisPtr& basis() const { return basis_; }
  int degree() const { return degree_; }
  const std::map<Monomial, ScalarExpr>& terms() const& { return terms_; }
  std::map<Monomial, ScalarExpr> terms() && { return std::move(terms_); }  // safe in range-for over temporaries
  bool is_zero() const { return terms_.empty(); }
  std::vector<int> indices(Monomial m) const;
  std::vector<std::string> symbols(Monomial m) const;

  // adds coeff to the stored coefficient of m (m must have `degree` bits)
  void accumulate(Monomial m, const ScalarExpr& coeff);

  template <class F>
  Form map_coefficients(F f) const {
    Form out(basis_, degree_);
    for (const auto& [m, c] : terms_) out.accumulate(m, f(c));
    return out;
  }

 private:
  BasisPtr basis_;
  int degree_ = 0;
  std::map<Monomial, ScalarExpr> terms_;
};

Form operator+(const Form& a, const Form& b);
Form operator-(const Form& a, const Form& b);
Form operator-(const Form& a);
Form operator*(const ScalarExpr& f, const Form& a);
inline Form operator*(const Form& a, const ScalarExpr& f) { return f * a; }
inline Form& operator+=(Form& a, const Form& b) { return a = a + b; }
inline Form& operator-=(Form& a, const Form& b) { return a = a - b; }

Form wedge(const Form& a, const Form& b);
Form conjugate(const Form& a);
Form reduce_mod_ideal(const Form& a, const std::vector<std::string>& generators);
ScalarExpr coefficient_of(const Form& a, const std::vector<std::string>& tuple);
// dictionary: every basis symbol of a -> one-form over the target basis
Form substitute_coframe(const Form& a, const std::map<std::string, Form>& dictionary);
Form substitute_functions(const Form& a, const std::map<std::string, ScalarExpr>& values);

// ---- coordinate charts -----------------------------------------------------
// Basis dz1..dzn, dzb1..dzbn over a complex chart.
struct CoordinateChart {
  ComplexChart chart;
  BasisPtr basis;
  std::string dz(std::size_t j) const { return basis->symbol(j); }
  std::string dzbar(std::size_t j) const { return basis->symbol(chart.coords.size() + j); }
};

// Chart z1..zn with x_j = z_j + conj(z_j), y_j = (z_j - conj(z_j))/i.
CoordinateChart make_tube_chart(std::size_t n);
Form d_coordinate(const Form& a, const CoordinateChart& chart);

// ---- abstract coframes -----------------------------------------------------
class AbstractCoframe {
 public:
  AbstractCoframe() = default;
  // Structure equations and function differentials may be given for one
  // member of each conjugate pair; the partner is filled in by conjugation.
  // A function mapped to std::nullopt is a placeholder: reaching it throws.
  AbstractCoframe(BasisPtr basis, std::map<std::string, Form> structure,
                  std::map<std::string, std::optional<Form>> functions = {});

  const BasisPtr& basis() const { return basis_; }
  const Form& structure(std::size_t k) const { return structure_[k]; }
  const Form& structure(const std::string& symbol) const { return structure_[std::size_t(basis_->index(symbol))]; }
  const std::map<std::string, std::optional<Form>>& functions() const { return functions_; }

  Form d(const Form& a) const;
  Form d_function(const ScalarExpr& f) const;

 private:
  Form d_monomial(Monomial m) const;

  BasisPtr basis_;
  std::vector<Form> structure_;
  std::map<std::string, std::optional<Form>> functions_;
  mutable std::map<Monomial, Form> cache_;
  mutable std::shared_ptr<std::mutex> mutex_ = std::make_shared<std::mutex>();
};

inline Form d_abstract(const Form& a, const AbstractCoframe& cf) { return cf.d(a); }
std::map<std::string, Form> d_squared_residuals(const AbstractCoframe& cf);

// ---- matrix-valued forms ---------------------------------------------------
class MatrixForm {
 public:
  MatrixForm() = default;
  MatrixForm(BasisPtr basis, std::size_t n, int degree);

  std::size_t dim() const { return n_; }
  int degree() const { return degree_; }
  const BasisPtr& basis() const { return basis_; }
  Form& operator()(std::size_t i, std::size_t j) { return entries_[i * n_ + j]; }
  const Form& operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
  bool is_zero() const;

  template <class F>
  MatrixForm map(F f) const {
    MatrixForm out(basis_, n_, degree_);
    for (std::size_t k = 0; k < entries_.size(); ++k) out.entries_[k] = f(entries_[k]);
    if (!entries_.empty()) out.degree_ = out.entries_[0].degree();
    return out;
  }

 private:
  BasisPtr basis_;
  std::size_t n_ = 0;
  int degree_ = 0;
  std::vector<Form> entries_;
};

MatrixForm operator+(const MatrixForm& a, const MatrixForm& b);
MatrixForm operator-(const MatrixForm& a, const MatrixForm& b);
MatrixForm matrix_wedge(const MatrixForm& a, const MatrixForm& b);
MatrixForm operator*(const EMatrix& g, const MatrixForm& a);
MatrixForm operator*(const MatrixForm& a, const EMatrix& g);
MatrixForm conjugate(const MatrixForm& a);
MatrixForm transpose(const MatrixForm& a);

template <class D>
MatrixForm exterior_d(const MatrixForm& a, const D& d) {
  return a.map([&](const Form& f) { return d(f); });
}

// C = d(omega) + omega ^ omega
template <class D>
MatrixForm curvature(const MatrixForm& omega, const D& d) {
  return exterior_d(omega, d) + matrix_wedge(omega, omega);
}

}  // namespace cartan_cr
