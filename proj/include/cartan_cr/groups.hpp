#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include "cartan_cr/forms.hpp"
#include "cartan_cr/matrix.hpp"

namespace cartan_cr {

struct GroupError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Tolerance used for floating-point membership tests; rational inputs are exact.
inline constexpr double kGroupTol = 1e-12;

inline bool negligible(const std::complex<double>& v, double tol = kGroupTol) { return std::abs(v) <= tol; }
inline bool negligible(const CRational& v, double = kGroupTol) { return v.is_zero(); }
inline bool is_real_value(const std::complex<double>& v, double tol = kGroupTol) { return std::abs(v.imag()) <= tol; }
inline bool is_real_value(const CRational& v, double = kGroupTol) { return v.is_real(); }

template <class T>
T abs2(const T& v) {
  return ScalarTraits<T>::conj(v) * v;
}

template <class T>
bool matrix_negligible(const Matrix<T>& m, double tol = kGroupTol) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (!negligible(m(i, j), tol)) return false;
  return true;
}

// ---- Hermitian form ---------------------------------------------------------
struct HermitianForm {
  int epsilon;
  explicit HermitianForm(int eps) : epsilon(eps) {
    if (eps != 1 && eps != -1) throw GroupError("epsilon must be +1 or -1");
  }
  int delta() const { return epsilon == 1 ? 0 : 1; }
  std::pair<int, int> signature() const { return {2 + delta(), 2 - delta()}; }

  template <class T>
  Matrix<T> matrix() const {
    using S = ScalarTraits<T>;
    Matrix<T> h(4, 4);
    h(0, 3) = S::one();
    h(3, 0) = S::one();
    h(1, 1) = S::rational(Rational(-epsilon));
    h(2, 2) = S::one();
    return h;
  }
};

// ---- group elements -------------------------------------------------------
enum class GroupTag { G0, G1, G2, G3, G4, G4prolong, PStar };
std::string to_string(GroupTag tag);

// One record covers every tag; the tag decides which fields are meaningful.
//   G0, G1:       t, c1..c3, b1..b3, a (2x2)
//   G2, G3, G4:   t, er = e^{ir}, es = e^{is}, c1..c3, b1, b2
//   G4prolong:    y
//   PStar:        t, p = e^{ir/4}, q = e^{is/4}, y, c1, c2
// Phases are stored as unit complex numbers so rational parameters stay exact.
template <class T>
struct GroupElement {
  using S = ScalarTraits<T>;
  GroupTag tag = GroupTag::G0;
  int epsilon = 1;
  T t = S::one();
  T c1 = S::zero(), c2 = S::zero(), c3 = S::zero();
  T b1 = S::zero(), b2 = S::zero(), b3 = S::one();
  Matrix<T> a = Matrix<T>::identity(2);
  T er = S::one(), es = S::one();
  T p = S::one(), q = S::one();
  T y = S::zero();
};

namespace detail {
template <class T>
void require(bool ok, const char* what) {
  if (!ok) throw GroupError(what);
}
template <class T>
void check_real_nonzero(const T& t) {
  require<T>(is_real_value(t), "t must be real");
  require<T>(!negligible(t), "t must be nonzero");
}
template <class T>
void check_unit(const T& u, const char* what) {
  require<T>(negligible(abs2(u) - ScalarTraits<T>::one()), what);
}
}  // namespace detail

template <class T>
Matrix<T> g0_matrix(const T& t, const T& c1, const T& c2, const T& c3, const Matrix<T>& a, const T& b1, const T& b2,
                    const T& b3) {
  Matrix<T> m(4, 4);
  m(0, 0) = t;
  m(1, 0) = c1;
  m(2, 0) = c2;
  m(3, 0) = c3;
  m(1, 1) = a(0, 0);
  m(1, 2) = a(0, 1);
  m(2, 1) = a(1, 0);
  m(2, 2) = a(1, 1);
  m(3, 1) = b1;
  m(3, 2) = b2;
  m(3, 3) = b3;
  return m;
}

template <class T>
Matrix<T> pstar_matrix(int epsilon, const T& t, const T& p, const T& q, const T& y, const T& c1, const T& c2) {
  using S = ScalarTraits<T>;
  T pb = S::conj(p), qb = S::conj(q);
  T w = pb * q;                  // e^{i(-r+s)/4}
  T v2 = pb * qb * qb * qb;      // e^{-i(r+3s)/4}
  T v3 = p * p * p * q;          // e^{i(3r+s)/4}
  T half = S::rational(Rational(1, 2));
  T eps = S::rational(Rational(epsilon));
  Matrix<T> m(4, 4);
  m(0, 0) = w / t;
  m(0, 1) = c2 * v2;
  m(0, 2) = -(S::conj(c1) * v3);
  m(0, 3) = t * w * (S::i() * y - half * (abs2(c1) - eps * abs2(c2)));
  m(1, 1) = v2;
  m(1, 3) = eps * S::conj(c2) * t * w;
  m(2, 2) = v3;
  m(2, 3) = c1 * t * w;
  m(3, 3) = t * w;
  return m;
}

template <class T>
Matrix<T> pstar2_matrix(const T& y) {
  Matrix<T> m = Matrix<T>::identity(4);
  m(0, 3) = ScalarTraits<T>::i() * y;
  return m;
}

// 9x9 matrix acting on (eta0, eta1, eta2, eta3, rho, sigma, tau, gamma1, gamma2).
template <class T>
Matrix<T> g4prolong_matrix(const T& y) {
  Matrix<T> m = Matrix<T>::identity(9);
  m(6, 0) = y;
  m(7, 1) = y;
  m(8, 2) = y;
  return m;
}

template <class T>
Matrix<T> matrix_of(const GroupElement<T>& g) {
  switch (g.tag) {
    case GroupTag::G0:
    case GroupTag::G1:
      return g0_matrix(g.t, g.c1, g.c2, g.c3, g.a, g.b1, g.b2, g.b3);
    case GroupTag::G2:
    case GroupTag::G3:
    case GroupTag::G4: {
      Matrix<T> a(2, 2);
      a(0, 0) = g.t * g.er;
      a(1, 1) = g.t * g.es;
      return g0_matrix(g.t * g.t, g.c1, g.c2, g.c3, a, g.b1, g.b2, g.er * g.es);
    }
    case GroupTag::G4prolong:
      return g4prolong_matrix(g.y);
    case GroupTag::PStar:
      return pstar_matrix(g.epsilon, g.t, g.p, g.q, g.y, g.c1, g.c2);
  }
  throw GroupError("unknown group tag");
}

// ---- membership predicates on 4x4 matrices ---------------------------------
template <class T>
bool in_g0(const Matrix<T>& m, double tol = kGroupTol) {
  if (m.rows() != 4 || m.cols() != 4) return false;
  for (std::size_t j = 1; j < 4; ++j)
    if (!negligible(m(0, j), tol)) return false;
  if (!negligible(m(1, 3), tol) || !negligible(m(2, 3), tol)) return false;
  if (!is_real_value(m(0, 0), tol) || negligible(m(0, 0), tol) || negligible(m(3, 3), tol)) return false;
  return !negligible(m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1), tol);
}

template <class T>
bool in_g1(const Matrix<T>& m, int epsilon, double tol = kGroupTol) {
  if (!in_g0(m, tol)) return false;
  T eps = ScalarTraits<T>::rational(Rational(epsilon));
  const T &t = m(0, 0), &a11 = m(1, 1), &a12 = m(1, 2), &a21 = m(2, 1), &a22 = m(2, 2);
  return negligible(t - abs2(a11) - eps * abs2(a21), tol) && negligible(t - eps * abs2(a12) - abs2(a22), tol) &&
         negligible(a11 * ScalarTraits<T>::conj(a12) + eps * a21 * ScalarTraits<T>::conj(a22), tol);
}

template <class T>
bool in_g2(const Matrix<T>& m, int epsilon, double tol = kGroupTol) {
  if (!in_g1(m, epsilon, tol)) return false;
  if (!negligible(m(1, 2), tol) || !negligible(m(2, 1), tol)) return false;
  // t^2 = |t e^{ir}|^2 = |t e^{is}|^2 and corner e^{i(r+s)} = a11 a22 / t^2
  return negligible(m(0, 0) - abs2(m(1, 1)), tol) && negligible(m(0, 0) - abs2(m(2, 2)), tol) &&
         negligible(m(3, 3) * m(0, 0) - m(1, 1) * m(2, 2), tol);
}

template <class T>
bool in_g3(const Matrix<T>& m, int epsilon, double tol = kGroupTol) {
  if (!in_g2(m, epsilon, tol)) return false;
  T i = ScalarTraits<T>::i();
  return negligible(m(3, 1) * m(0, 0) - i * m(1, 1) * m(2, 0), tol) &&
         negligible(m(3, 2) * m(0, 0) - i * m(2, 2) * m(1, 0), tol);
}

template <class T>
bool in_g4(const Matrix<T>& m, int epsilon, double tol = kGroupTol) {
  if (!in_g3(m, epsilon, tol)) return false;
  return negligible(m(3, 0) * m(0, 0) - ScalarTraits<T>::i() * m(1, 0) * m(2, 0), tol);
}

template <class T>
bool in_g1(const GroupElement<T>& g, double tol = kGroupTol) {
  return g.tag != GroupTag::G4prolong && g.tag != GroupTag::PStar && in_g1(matrix_of(g), g.epsilon, tol);
}

// conj(m)^T h m = h and det m = 1
template <class T>
bool is_hermitian_frame(const Matrix<T>& m, const HermitianForm& h, double tol = kGroupTol) {
  if (m.rows() != 4 || m.cols() != 4) return false;
  Matrix<T> H = h.matrix<T>();
  return matrix_negligible(m.adjoint() * H * m - H, tol) && negligible(m.determinant() - ScalarTraits<T>::one(), tol);
}

// trace X = 0 and conj(X)^T h + h X = 0
template <class T>
bool in_su_star(const Matrix<T>& x, const HermitianForm& h, double tol = kGroupTol) {
  if (x.rows() != 4 || x.cols() != 4) return false;
  Matrix<T> H = h.matrix<T>();
  return negligible(x.trace(), tol) && matrix_negligible(x.adjoint() * H + H * x, tol);
}

// Structural check: every coefficient of the defining relations is the literal zero.
bool in_su_star(const MatrixForm& omega, const HermitianForm& h);
bool in_su_star(const MatrixForm& omega, const EMatrix& hermitian);

// ---- factories (validate parameters) ----------------------------------------
template <class T>
GroupElement<T> make_g0(int epsilon, const T& t, const T& c1, const T& c2, const T& c3, const Matrix<T>& a, const T& b1,
                        const T& b2, const T& b3) {
  HermitianForm{epsilon};
  detail::check_real_nonzero(t);
  detail::require<T>(!negligible(b3), "b3 must be nonzero");
  detail::require<T>(a.rows() == 2 && a.cols() == 2 && !negligible(a.determinant()), "a-block must be invertible");
  GroupElement<T> g;
  g.tag = GroupTag::G0;
  g.epsilon = epsilon;
  g.t = t;
  g.c1 = c1;
  g.c2 = c2;
  g.c3 = c3;
  g.a = a;
  g.b1 = b1;
  g.b2 = b2;
  g.b3 = b3;
  return g;
}

template <class T>
GroupElement<T> make_g1(int epsilon, const T& t, const T& c1, const T& c2, const T& c3, const Matrix<T>& a, const T& b1,
                        const T& b2, const T& b3) {
  GroupElement<T> g = make_g0(epsilon, t, c1, c2, c3, a, b1, b2, b3);
  detail::require<T>(in_g1(matrix_of(g), epsilon), "parameters violate the G1 relations");
  g.tag = GroupTag::G1;
  return g;
}

template <class T>
GroupElement<T> make_g2(int epsilon, const T& t, const T& er, const T& es, const T& c1, const T& c2, const T& c3,
                        const T& b1, const T& b2) {
  HermitianForm{epsilon};
  detail::check_real_nonzero(t);
  detail::check_unit(er, "e^{ir} must be unimodular");
  detail::check_unit(es, "e^{is} must be unimodular");
  GroupElement<T> g;
  g.tag = GroupTag::G2;
  g.epsilon = epsilon;
  g.t = t;
  g.er = er;
  g.es = es;
  g.c1 = c1;
  g.c2 = c2;
  g.c3 = c3;
  g.b1 = b1;
  g.b2 = b2;
  return g;
}

template <class T>
GroupElement<T> make_g3(int epsilon, const T& t, const T& er, const T& es, const T& c1, const T& c2, const T& c3) {
  T i = ScalarTraits<T>::i();
  detail::check_real_nonzero(t);
  GroupElement<T> g = make_g2(epsilon, t, er, es, c1, c2, c3, i / t * er * c2, i / t * es * c1);
  g.tag = GroupTag::G3;
  return g;
}

template <class T>
GroupElement<T> make_g4(int epsilon, const T& t, const T& er, const T& es, const T& c1, const T& c2) {
  detail::check_real_nonzero(t);
  GroupElement<T> g = make_g3(epsilon, t, er, es, c1, c2, ScalarTraits<T>::i() / (t * t) * c1 * c2);
  g.tag = GroupTag::G4;
  return g;
}

template <class T>
GroupElement<T> make_g4prolong(const T& y) {
  detail::require<T>(is_real_value(y), "y must be real");
  GroupElement<T> g;
  g.tag = GroupTag::G4prolong;
  g.y = y;
  return g;
}

template <class T>
GroupElement<T> make_pstar(int epsilon, const T& t, const T& p, const T& q, const T& y, const T& c1, const T& c2) {
  HermitianForm{epsilon};
  detail::check_real_nonzero(t);
  detail::check_unit(p, "e^{ir/4} must be unimodular");
  detail::check_unit(q, "e^{is/4} must be unimodular");
  detail::require<T>(is_real_value(y), "y must be real");
  GroupElement<T> g;
  g.tag = GroupTag::PStar;
  g.epsilon = epsilon;
  g.t = t;
  g.p = p;
  g.q = q;
  g.y = y;
  g.c1 = c1;
  g.c2 = c2;
  return g;
}

template <class T>
struct PStarFactors {
  GroupElement<T> p2, p1, p0;
};

// g = P2 * P1 * P0 with P2 carrying y, P1 the c's, P0 the diagonal.
template <class T>
PStarFactors<T> pstar_decompose(const GroupElement<T>& g) {
  if (g.tag != GroupTag::PStar) throw GroupError("pstar_decompose needs a PStar element");
  using S = ScalarTraits<T>;
  T one = S::one(), zero = S::zero();
  return {make_pstar(g.epsilon, one, one, one, g.y, zero, zero), make_pstar(g.epsilon, one, one, one, zero, g.c1, g.c2),
          make_pstar(g.epsilon, g.t, g.p, g.q, zero, zero, zero)};
}

// ---- Maurer-Cartan model and the parallelism ---------------------------------
// Basis eta0..eta3, eta1b..eta3b, tau, rho, sigma, gamma1, gamma2, gamma1b, gamma2b, psi.
BasisPtr parallelism_basis(ConjugateMap function_partners = {});
const std::vector<std::string>& parallelism_symbols();

// omega built from the ten real/complex slots; conjugates come from conjugate().
MatrixForm assemble_omega(const std::map<std::string, Form>& slots, int epsilon);
MatrixForm assemble_omega(const BasisPtr& basis, int epsilon);

// The flat structure equations. `corrupt` flips one sign (mutation testing).
AbstractCoframe maurer_cartan_coframe(int epsilon, bool corrupt = false);

struct MaurerCartanReport {
  int epsilon = 1;
  std::map<std::string, Form> d_squared;
  MatrixForm mc_residual;  // d(omega) + omega ^ omega
  bool ok() const;
};
MaurerCartanReport verify_maurer_cartan(int epsilon, bool corrupt = false);

// tau -> tau - y eta0, gamma_j -> gamma_j - y eta_j, psi -> psi - 2y tau + y^2 eta0
std::map<std::string, Form> prolong_pullback(const BasisPtr& basis, const ScalarExpr& y);

// g X g^{-1}
MatrixForm adjoint(const EMatrix& g, const MatrixForm& x);

// substitute(omega) - Ad_{P2(y)} omega; `mutate` uses Ad with g^{-1} in place of g.
MatrixForm equivariance_residual(int epsilon, const ScalarExpr& y, bool mutate = false);

}  // namespace cartan_cr
