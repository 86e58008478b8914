#pragma once
#include <array>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cartan_cr/expr.hpp"
#include "cartan_cr/forms.hpp"
#include "cartan_cr/groups.hpp"
#include "cartan_cr/matrix.hpp"

namespace cartan_cr {

struct CrError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A named precondition failed; `condition` is a short machine-readable tag.
struct PreconditionError : CrError {
  std::string condition;
  PreconditionError(std::string cond, const std::string& msg)
      : CrError(cond + ": " + msg), condition(std::move(cond)) {}
};

struct ShapeError : CrError {
  std::vector<std::string> failures;
  explicit ShapeError(std::vector<std::string> f);
};

const std::vector<std::string>& tube_coordinates();  // x1, x2, x3

// Tube hypersurface z4 + conj(z4) = f(x1, x2, x3) with x_j = z_j + conj(z_j).
struct DefiningFunction {
  ScalarExpr f;
  Domain domain;  // box (0.1, 10)^3 unless replaced

  explicit DefiningFunction(ScalarExpr expr, Domain dom = {});
  static DefiningFunction parse(const std::string& text);

  ScalarExpr fj(int j) const;          // 1-based
  ScalarExpr fjk(int j, int k) const;  // 1-based
};

// Chart z1..z4 shared by everything that returns chart forms.
const CoordinateChart& tube_chart();

Form contact_form(const DefiningFunction& df);

struct LeviData {
  EMatrix matrix;  // 3x3, f_jk
  Form contact;
};
EMatrix levi_matrix(const DefiningFunction& df);
LeviData levi_data(const DefiningFunction& df);
// Numerical rank of the Levi matrix at `p` (relative pivot tolerance).
int levi_rank(const DefiningFunction& df, const Point& p, double tol = 1e-9);
// Smallest rank over the sample; the Levi form of a hypersurface with f = 0 has rank 0.
int levi_rank(const DefiningFunction& df, const ZeroTestOptions& opt = {});

// f11 f22 f33 - f11 f23^2 - f22 f13^2; requires f12 = 0.
ScalarExpr degeneracy_residual(const DefiningFunction& df);
// f23^2 - f22 f33 / 2 and f13^2 - f11 f33 / 2
std::array<ScalarExpr, 2> detzero_split_residuals(const DefiningFunction& df);

// ---- coframes of the tube ----------------------------------------------------
//
// The reference coframe has basis th0 (real), dz1..dz3, dzb1..dzb3 with
//   d th0 = i f_jk dz^j ^ dzb^k,  d dz = 0,  d x_j = dz_j + dzb_j.
// A tube coframe is theta = K (th0, dz1, dz2, dz3)^T with K(0, .) = (t, 0, 0, 0),
// t real. Its own basis is eta0..eta3, eta1b..eta3b.
//
// `partners` lists complex auxiliary symbols (e.g. unknown group parameters)
// occurring in K; they are treated as constants, d c = 0.

class TubeCoframe {
 public:
  TubeCoframe(const DefiningFunction& df, EMatrix K, ConjugateMap partners = {});

  const DefiningFunction& defining_function() const { return df_; }
  const EMatrix& matrix() const { return K_; }
  const BasisPtr& basis() const { return cf_.basis(); }
  const AbstractCoframe& coframe() const { return cf_; }
  const AbstractCoframe& reference() const { return ref_; }

  Form eta(int k) const;   // basis form eta_k, k = 0..3
  Form etab(int k) const;  // eta_kb, k = 1..3; etab(0) = eta(0)
  const Form& structure(int k) const { return cf_.structure(eta_symbol(k)); }
  Form d(const Form& a) const { return cf_.d(a); }

  // theta_k as a form over dz1..dz4, dzb1..dzb4 (tube_chart()).
  Form on_chart(int k) const;

  // Apply a 4x4 matrix on the left: theta' = g theta.
  TubeCoframe transformed(const EMatrix& g, const ConjugateMap& extra = {}) const;
  // Replace auxiliary symbols by expressions.
  TubeCoframe substituted(const std::map<std::string, ScalarExpr>& values) const;

  static const std::string& eta_symbol(int k);
  static const std::string& etab_symbol(int k);

 private:
  DefiningFunction df_;
  EMatrix K_;
  ConjugateMap partners_;
  AbstractCoframe ref_;
  AbstractCoframe cf_;
};

using Signs = std::array<int, 2>;

// theta1 = sqrt(f11) dz1 + s1 sqrt(f33/2) dz3, theta2 likewise, theta3 = dz3.
TubeCoframe diagonalizing_coframe(const DefiningFunction& df, Signs signs = {-1, -1});
// d theta0 - i theta1^theta1b - i theta2^theta2b, reduced mod theta0.
Form levi_diagonal_residual(const TubeCoframe& c);
// Sign choice matching the sign of f13, f23 at a sample point.
Signs natural_signs(const DefiningFunction& df);

// ---- cubic form ----------------------------------------------------------------

struct CubicMatrices {
  EMatrix ell;  // 2x2
  EMatrix u;    // 2x2
};
// Reads ell and u off a 0-adapted coframe; throws ShapeError when the
// structure equations fail the expected shape.
CubicMatrices cubic_matrix(const TubeCoframe& c);
std::vector<std::string> cubic_shape_failures(const TubeCoframe& c);

// lambda with conj(u)^T ell u = lambda conj(ell), if it exists and is nonzero.
std::optional<ScalarExpr> conformal_unitary_check(const EMatrix& ell, const EMatrix& u, const Domain& domain = {},
                                                  const ZeroTestOptions& opt = {});
std::optional<std::complex<double>> conformal_unitary_check(const CMatrix& ell, const CMatrix& u, double tol = 1e-9);

// u = [[U1, eps U], [U, U2]]
struct CubicData {
  int epsilon = 1;
  std::complex<double> U1, U, U2;
  std::optional<std::complex<double>> lambda;

  CMatrix matrix() const;
  static CubicData from_matrix(const CMatrix& u, int epsilon, double tol = 1e-9);
};

struct SymbolicCubic {
  int epsilon = 1;
  ScalarExpr U1, U, U2;
  std::optional<ScalarExpr> lambda;
  CubicData at(const Point& p) const;
};
// Requires the coframe to be 1-adapted (ell = diag(1, eps)).
SymbolicCubic symbolic_cubic(const TubeCoframe& c, const Domain& domain = {}, const ZeroTestOptions& opt = {});

enum class IsotropyClass { Definite, Switching, Preserving, Degenerate };
std::string to_string(IsotropyClass c);

// |U1|^2 - |U2|^2 and conj(U1) U + conj(U) U2, scaled by the size of the triple.
double conformal_unitary_defect(const CubicData& cd);
IsotropyClass isotropy_class(const CubicData& cd, double tol = 1e-9);

// u -> A u conj(A)^{-1} / b3 for a G1 element.
CubicData transport(const CubicData& cd, const GroupElement<std::complex<double>>& g);
// G1 element carrying cd to (U1, U, U2) = (0, 1, 0).
GroupElement<std::complex<double>> normalize_cubic(const CubicData& cd, double tol = 1e-9);

}  // namespace cartan_cr
