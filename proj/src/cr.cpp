#include "cartan_cr/cr.hpp"

#include <algorithm>
#include <cmath>

namespace cartan_cr {

namespace {

ScalarExpr I() { return ScalarExpr::imaginary_unit(); }

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : "; ") + x;
  return s;
}

bool zero(const ScalarExpr& e, const Domain& dom, const ZeroTestOptions& opt = {}) {
  return e.is_zero_literal() || is_zero(e, dom, opt);
}

ConjugateMap both_ways(const ConjugateMap& m) {
  ConjugateMap out = m;
  for (const auto& [a, b] : m) out.emplace(b, a);
  return out;
}

}  // namespace

ShapeError::ShapeError(std::vector<std::string> f) : CrError("shape violation: " + join(f)), failures(std::move(f)) {}

const std::vector<std::string>& tube_coordinates() {
  static const std::vector<std::string> c{"x1", "x2", "x3"};
  return c;
}

const CoordinateChart& tube_chart() {
  static const CoordinateChart c = make_tube_chart(4);
  return c;
}

// ---- defining function -----------------------------------------------------------

DefiningFunction::DefiningFunction(ScalarExpr expr, Domain dom) : f(std::move(expr)), domain(std::move(dom)) {
  for (const auto& v : coordinates(f))
    if (std::find(tube_coordinates().begin(), tube_coordinates().end(), v) == tube_coordinates().end())
      throw CrError("defining function may only depend on x1, x2, x3 (found " + v + ")");
  if (!zero(imag_part(f), domain)) throw CrError("defining function is not real-valued");
}

DefiningFunction DefiningFunction::parse(const std::string& text) {
  return DefiningFunction(cartan_cr::parse(text, tube_coordinates()));
}

ScalarExpr DefiningFunction::fj(int j) const {
  if (j < 1 || j > 3) throw CrError("index out of range");
  return wirtinger(f, tube_chart().chart, "z" + std::to_string(j));
}

ScalarExpr DefiningFunction::fjk(int j, int k) const {
  if (k < 1 || k > 3) throw CrError("index out of range");
  return wirtinger_bar(fj(j), tube_chart().chart, "z" + std::to_string(k));
}

Form contact_form(const DefiningFunction& df) {
  const auto& ch = tube_chart();
  Form th = Form::basis_form(ch.basis, "dz4", I());
  for (int j = 1; j <= 3; ++j) th += Form::basis_form(ch.basis, "dz" + std::to_string(j), -I() * df.fj(j));
  return th;
}

EMatrix levi_matrix(const DefiningFunction& df) {
  EMatrix m(3, 3);
  for (int j = 1; j <= 3; ++j)
    for (int k = 1; k <= 3; ++k) m(j - 1, k - 1) = df.fjk(j, k);
  return m;
}

LeviData levi_data(const DefiningFunction& df) { return {levi_matrix(df), contact_form(df)}; }

int levi_rank(const DefiningFunction& df, const Point& p, double tol) {
  EMatrix L = levi_matrix(df);
  double a[3][3];
  double scale = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      a[i][j] = eval(L(i, j), p).real();
      scale = std::max(scale, std::abs(a[i][j]));
    }
  if (scale == 0.0) return 0;
  int rank = 0;
  bool used[3] = {false, false, false};
  for (int col = 0; col < 3; ++col) {
    int piv = -1;
    double best = tol * scale;
    for (int r = 0; r < 3; ++r)
      if (!used[r] && std::abs(a[r][col]) > best) {
        best = std::abs(a[r][col]);
        piv = r;
      }
    if (piv < 0) continue;
    used[piv] = true;
    ++rank;
    for (int r = 0; r < 3; ++r) {
      if (r == piv) continue;
      double f = a[r][col] / a[piv][col];
      for (int k = 0; k < 3; ++k) a[r][k] -= f * a[piv][k];
    }
  }
  return rank;
}

int levi_rank(const DefiningFunction& df, const ZeroTestOptions& opt) {
  EMatrix L = levi_matrix(df);
  std::vector<ScalarExpr> probe;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) probe.push_back(L(i, j));
  int rank = 3;
  for (const auto& p : sample_points(tube_coordinates(), df.domain, opt.samples, opt.seed, probe))
    rank = std::min(rank, levi_rank(df, p));
  return rank;
}

ScalarExpr degeneracy_residual(const DefiningFunction& df) {
  if (!zero(df.fjk(1, 2), df.domain)) throw PreconditionError("f12=0", "the mixed partial f12 does not vanish");
  ScalarExpr f11 = df.fjk(1, 1), f22 = df.fjk(2, 2), f33 = df.fjk(3, 3), f13 = df.fjk(1, 3), f23 = df.fjk(2, 3);
  return f11 * f22 * f33 - f11 * f23 * f23 - f22 * f13 * f13;
}

std::array<ScalarExpr, 2> detzero_split_residuals(const DefiningFunction& df) {
  ScalarExpr half(Rational(1, 2));
  ScalarExpr f11 = df.fjk(1, 1), f22 = df.fjk(2, 2), f33 = df.fjk(3, 3), f13 = df.fjk(1, 3), f23 = df.fjk(2, 3);
  return {f23 * f23 - half * f22 * f33, f13 * f13 - half * f11 * f33};
}

// ---- tube coframes -------------------------------------------------------------------

namespace {

BasisPtr reference_basis(const ConjugateMap& partners) {
  return make_basis({{"th0", ""},
                     {"dz1", "dzb1"},
                     {"dz2", "dzb2"},
                     {"dz3", "dzb3"},
                     {"dzb1", "dz1"},
                     {"dzb2", "dz2"},
                     {"dzb3", "dz3"}},
                    partners);
}

BasisPtr eta_basis(const ConjugateMap& partners) {
  return make_basis({{"eta0", ""},
                     {"eta1", "eta1b"},
                     {"eta2", "eta2b"},
                     {"eta3", "eta3b"},
                     {"eta1b", "eta1"},
                     {"eta2b", "eta2"},
                     {"eta3b", "eta3"}},
                    partners);
}

AbstractCoframe reference_coframe(const DefiningFunction& df, const ConjugateMap& partners) {
  BasisPtr b = reference_basis(partners);
  Form dth(b, 2);
  for (int j = 1; j <= 3; ++j)
    for (int k = 1; k <= 3; ++k) {
      ScalarExpr c = df.fjk(j, k);
      if (c.is_zero_literal()) continue;
      dth += Form::monomial(b, {"dz" + std::to_string(j), "dzb" + std::to_string(k)}, I() * c);
    }
  std::map<std::string, Form> se{{"th0", dth}};
  for (int j = 1; j <= 3; ++j) se.emplace("dz" + std::to_string(j), Form(b, 2));
  std::map<std::string, std::optional<Form>> fn;
  for (int j = 1; j <= 3; ++j) {
    std::string s = std::to_string(j);
    fn.emplace("x" + s, Form::basis_form(b, "dz" + s) + Form::basis_form(b, "dzb" + s));
  }
  for (const auto& [a, c] : partners) fn.emplace(a, Form(b, 1));
  return AbstractCoframe(b, std::move(se), std::move(fn));
}

}  // namespace

const std::string& TubeCoframe::eta_symbol(int k) {
  static const std::string s[] = {"eta0", "eta1", "eta2", "eta3"};
  return s[k];
}

const std::string& TubeCoframe::etab_symbol(int k) {
  static const std::string s[] = {"eta0", "eta1b", "eta2b", "eta3b"};
  return s[k];
}

TubeCoframe::TubeCoframe(const DefiningFunction& df, EMatrix K, ConjugateMap partners)
    : df_(df), K_(std::move(K)), partners_(both_ways(partners)) {
  if (K_.rows() != 4 || K_.cols() != 4) throw CrError("coframe matrix must be 4x4");
  for (int j = 1; j < 4; ++j)
    if (!K_(0, j).is_zero_literal()) throw CrError("coframe matrix must keep theta0 a multiple of the contact form");
  if (K_(0, 0).is_zero_literal() || !zero(imag_part(K_(0, 0)), df_.domain))
    throw CrError("theta0 must be a real multiple of the contact form");

  ref_ = reference_coframe(df_, partners_);
  const BasisPtr& R = ref_.basis();
  const char* rho_names[] = {"th0", "dz1", "dz2", "dz3"};

  EMatrix Kinv;
  try {
    Kinv = K_.inverse();
  } catch (const std::domain_error&) {
    throw CrError("coframe matrix is singular");
  }

  BasisPtr E = eta_basis(partners_);
  std::vector<Form> eta;
  for (int k = 0; k < 4; ++k) eta.push_back(Form::basis_form(E, eta_symbol(k)));

  std::map<std::string, Form> dict;
  for (int a = 0; a < 4; ++a) {
    Form img(E, 1);
    for (int b = 0; b < 4; ++b)
      if (!Kinv(a, b).is_zero_literal()) img += Kinv(a, b) * eta[b];
    dict[rho_names[a]] = img;
    if (a > 0) dict["dzb" + std::to_string(a)] = conjugate(img);
  }

  std::map<std::string, Form> se;
  for (int a = 0; a < 4; ++a) {
    Form th(R, 1);
    for (int b = 0; b < 4; ++b)
      if (!K_(a, b).is_zero_literal()) th += Form::basis_form(R, rho_names[b], K_(a, b));
    se[eta_symbol(a)] = substitute_coframe(ref_.d(th), dict);
  }
  std::map<std::string, std::optional<Form>> fn;
  for (int j = 1; j <= 3; ++j) {
    std::string s = std::to_string(j);
    fn.emplace("x" + s, dict["dz" + s] + dict["dzb" + s]);
  }
  for (const auto& [a, c] : partners_) fn.emplace(a, Form(E, 1));
  cf_ = AbstractCoframe(E, std::move(se), std::move(fn));
}

Form TubeCoframe::eta(int k) const { return Form::basis_form(basis(), eta_symbol(k)); }
Form TubeCoframe::etab(int k) const { return Form::basis_form(basis(), etab_symbol(k)); }

Form TubeCoframe::on_chart(int k) const {
  const auto& ch = tube_chart();
  Form out = K_(k, 0) * contact_form(df_);
  for (int j = 1; j <= 3; ++j)
    if (!K_(k, j).is_zero_literal()) out += Form::basis_form(ch.basis, "dz" + std::to_string(j), K_(k, j));
  return out;
}

TubeCoframe TubeCoframe::transformed(const EMatrix& g, const ConjugateMap& extra) const {
  ConjugateMap p = partners_;
  for (const auto& [a, b] : extra) p.emplace(a, b);
  return TubeCoframe(df_, g * K_, p);
}

TubeCoframe TubeCoframe::substituted(const std::map<std::string, ScalarExpr>& values) const {
  ConjugateMap p;
  for (const auto& [a, b] : partners_)
    if (!values.count(a) && !values.count(b)) p.emplace(a, b);
  std::map<std::string, ScalarExpr> all = values;
  for (const auto& [a, v] : values) {
    auto it = partners_.find(a);
    if (it != partners_.end() && !values.count(it->second)) all.emplace(it->second, conj(v, partners_));
  }
  return TubeCoframe(df_, K_.map([&](const ScalarExpr& e) { return substitute(e, all); }), p);
}

// ---- diagonalizing coframe -------------------------------------------------------------

Signs natural_signs(const DefiningFunction& df) {
  ScalarExpr f13 = df.fjk(1, 3), f23 = df.fjk(2, 3);
  auto pts = sample_points(tube_coordinates(), df.domain, 1, 0, {f13, f23});
  const Point& p = pts.front();
  return {eval(f13, p).real() < 0 ? -1 : 1, eval(f23, p).real() < 0 ? -1 : 1};
}

Form levi_diagonal_residual(const TubeCoframe& c) {
  Form r = c.structure(0) - I() * wedge(c.eta(1), c.etab(1)) - I() * wedge(c.eta(2), c.etab(2));
  return reduce_mod_ideal(r, {"eta0"});
}

TubeCoframe diagonalizing_coframe(const DefiningFunction& df, Signs signs) {
  for (int s : signs)
    if (s != 1 && s != -1) throw CrError("signs must be +1 or -1");
  if (!zero(df.fjk(1, 2), df.domain)) throw PreconditionError("f12=0", "the mixed partial f12 does not vanish");
  ScalarExpr f11 = df.fjk(1, 1), f22 = df.fjk(2, 2), f33 = df.fjk(3, 3);
  ZeroTestOptions opt;
  std::vector<Point> pts;
  try {
    pts = sample_points(tube_coordinates(), df.domain, opt.samples, opt.seed, {f11, f22, f33});
  } catch (const SamplerError&) {
    throw PreconditionError("f_jj>0", "the diagonal Levi entries cannot be evaluated on the domain");
  }
  for (const auto& p : pts)
    for (const auto* e : {&f11, &f22, &f33}) {
      ComplexValue v = eval(*e, p);
      if (!(v.real() > 0) || std::abs(v.imag()) > 1e-12 * std::max(1.0, std::abs(v)))
        throw PreconditionError("f_jj>0", "a diagonal Levi entry is not positive on the domain");
    }
  for (const auto& r : detzero_split_residuals(df))
    if (!zero(r, df.domain))
      throw PreconditionError("detzerosatisfied", "f_k3^2 = f_kk f33 / 2 fails for some k");

  ScalarExpr h = sqrt(f33 * ScalarExpr(Rational(1, 2)));
  EMatrix K = EMatrix::identity(4);
  K(1, 1) = sqrt(f11);
  K(1, 3) = ScalarExpr(signs[0]) * h;
  K(2, 2) = sqrt(f22);
  K(2, 3) = ScalarExpr(signs[1]) * h;
  TubeCoframe c(df, K);
  for (const auto& [m, coef] : levi_diagonal_residual(c).terms())
    if (!zero(coef, df.domain))
      throw PreconditionError("levi_diagonal", "the chosen signs do not diagonalize the Levi form");
  return c;
}

// ---- cubic form ---------------------------------------------------------------------------

std::vector<std::string> cubic_shape_failures(const TubeCoframe& c) {
  const Domain& dom = c.defining_function().domain;
  std::vector<std::string> bad;
  auto check = [&](const std::string& label, const Form& f, const std::vector<Monomial>& allowed) {
    for (const auto& [m, coef] : f.terms()) {
      if (std::find(allowed.begin(), allowed.end(), m) != allowed.end()) continue;
      if (zero(coef, dom)) continue;
      std::string mono;
      for (const auto& s : f.symbols(m)) mono += (mono.empty() ? "" : "^") + s;
      bad.push_back(label + " has a " + mono + " term");
    }
  };
  const Basis& B = *c.basis();
  auto bit = [&](const std::string& s) { return Monomial(1) << B.index(s); };
  std::vector<Monomial> levi;
  for (int j = 1; j <= 2; ++j)
    for (int k = 1; k <= 2; ++k) levi.push_back(bit(TubeCoframe::eta_symbol(j)) | bit(TubeCoframe::etab_symbol(k)));
  check("d theta0 mod theta0", reduce_mod_ideal(c.structure(0), {"eta0"}), levi);
  std::vector<Monomial> cub{bit("eta3") | bit("eta1b"), bit("eta3") | bit("eta2b")};
  for (int j = 1; j <= 2; ++j)
    check("d theta" + std::to_string(j) + " mod theta0,theta1,theta2",
          reduce_mod_ideal(c.structure(j), {"eta0", "eta1", "eta2"}), cub);
  check("d theta3 mod theta0..theta3", reduce_mod_ideal(c.structure(3), {"eta0", "eta1", "eta2", "eta3"}), {});
  return bad;
}

CubicMatrices cubic_matrix(const TubeCoframe& c) {
  auto bad = cubic_shape_failures(c);
  if (!bad.empty()) throw ShapeError(bad);
  CubicMatrices out{EMatrix(2, 2), EMatrix(2, 2)};
  for (int j = 1; j <= 2; ++j) {
    Form r = reduce_mod_ideal(c.structure(j), {"eta0", "eta1", "eta2"});
    for (int k = 1; k <= 2; ++k) {
      out.ell(j - 1, k - 1) =
          -I() * coefficient_of(c.structure(0), {TubeCoframe::eta_symbol(j), TubeCoframe::etab_symbol(k)});
      out.u(j - 1, k - 1) = coefficient_of(r, {"eta3", TubeCoframe::etab_symbol(k)});
    }
  }
  return out;
}

std::optional<ScalarExpr> conformal_unitary_check(const EMatrix& ell, const EMatrix& u, const Domain& domain,
                                                  const ZeroTestOptions& opt) {
  EMatrix lb = ell.conjugate();
  EMatrix W = u.adjoint() * ell * u;
  ScalarExpr lambda = zero(lb(0, 1), domain, opt) ? W(0, 0) / lb(0, 0) : W(0, 1) / lb(0, 1);
  if (zero(lambda, domain, opt)) return std::nullopt;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      if (!zero(W(i, j) - lambda * lb(i, j), domain, opt)) return std::nullopt;
  return lambda;
}

std::optional<std::complex<double>> conformal_unitary_check(const CMatrix& ell, const CMatrix& u, double tol) {
  CMatrix lb = ell.conjugate();
  CMatrix W = u.adjoint() * ell * u;
  double scale = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) scale = std::max(scale, std::abs(W(i, j)));
  std::complex<double> lambda = std::abs(lb(0, 1)) > std::abs(lb(0, 0)) ? W(0, 1) / lb(0, 1) : W(0, 0) / lb(0, 0);
  if (std::abs(lambda) <= tol) return std::nullopt;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      if (std::abs(W(i, j) - lambda * lb(i, j)) > tol * std::max(1.0, scale)) return std::nullopt;
  return lambda;
}

CMatrix CubicData::matrix() const {
  CMatrix u(2, 2);
  u(0, 0) = U1;
  u(0, 1) = double(epsilon) * U;
  u(1, 0) = U;
  u(1, 1) = U2;
  return u;
}

CubicData CubicData::from_matrix(const CMatrix& u, int epsilon, double tol) {
  HermitianForm{epsilon};
  double scale = std::max({1.0, std::abs(u(0, 0)), std::abs(u(1, 0)), std::abs(u(1, 1))});
  if (std::abs(u(0, 1) - double(epsilon) * u(1, 0)) > tol * scale)
    throw CrError("cubic matrix is not of the form [[U1, eps U], [U, U2]]");
  CubicData cd;
  cd.epsilon = epsilon;
  cd.U1 = u(0, 0);
  cd.U = u(1, 0);
  cd.U2 = u(1, 1);
  cd.lambda = std::norm(cd.U1) + double(epsilon) * std::norm(cd.U);
  return cd;
}

CubicData SymbolicCubic::at(const Point& p) const {
  CubicData cd;
  cd.epsilon = epsilon;
  cd.U1 = eval(U1, p);
  cd.U = eval(U, p);
  cd.U2 = eval(U2, p);
  if (lambda) cd.lambda = eval(*lambda, p);
  return cd;
}

SymbolicCubic symbolic_cubic(const TubeCoframe& c, const Domain& domain, const ZeroTestOptions& opt) {
  CubicMatrices cm = cubic_matrix(c);
  if (!zero(cm.ell(0, 0) - ScalarExpr(1), domain, opt) || !zero(cm.ell(0, 1), domain, opt) ||
      !zero(cm.ell(1, 0), domain, opt))
    throw PreconditionError("1-adapted", "the Levi matrix is not diag(1, eps)");
  int eps;
  if (zero(cm.ell(1, 1) - ScalarExpr(1), domain, opt))
    eps = 1;
  else if (zero(cm.ell(1, 1) + ScalarExpr(1), domain, opt))
    eps = -1;
  else
    throw PreconditionError("1-adapted", "the Levi matrix is not diag(1, eps)");
  SymbolicCubic s;
  s.epsilon = eps;
  s.U1 = cm.u(0, 0);
  s.U = cm.u(1, 0);
  s.U2 = cm.u(1, 1);
  if (!zero(cm.u(0, 1) - ScalarExpr(eps) * s.U, domain, opt))
    throw CrError("cubic matrix is not of the form [[U1, eps U], [U, U2]]");
  s.lambda = conformal_unitary_check(cm.ell, cm.u, domain, opt);
  return s;
}

std::string to_string(IsotropyClass c) {
  switch (c) {
    case IsotropyClass::Definite: return "definite";
    case IsotropyClass::Switching: return "isotropy-switching";
    case IsotropyClass::Preserving: return "isotropy-preserving";
    case IsotropyClass::Degenerate: return "degenerate";
  }
  return "?";
}

double conformal_unitary_defect(const CubicData& cd) {
  double s = std::norm(cd.U1) + std::norm(cd.U) + std::norm(cd.U2);
  if (s == 0.0) return 0.0;
  double a = std::abs(std::norm(cd.U1) - std::norm(cd.U2));
  double b = std::abs(std::conj(cd.U1) * cd.U + std::conj(cd.U) * cd.U2);
  return std::max(a, b) / s;
}

IsotropyClass isotropy_class(const CubicData& cd, double tol) {
  HermitianForm{cd.epsilon};
  double s = std::norm(cd.U1) + std::norm(cd.U) + std::norm(cd.U2);
  if (s == 0.0) return IsotropyClass::Degenerate;
  if (conformal_unitary_defect(cd) > tol) throw CrError("cubic data violates the conformal unitary relations");
  if (cd.epsilon == 1) return IsotropyClass::Definite;
  double d = std::norm(cd.U) - std::norm(cd.U1);
  if (std::abs(d) <= tol * s) return IsotropyClass::Degenerate;
  return d > 0 ? IsotropyClass::Switching : IsotropyClass::Preserving;
}

CubicData transport(const CubicData& cd, const GroupElement<std::complex<double>>& g) {
  if (g.epsilon != cd.epsilon) throw GroupError("transport: epsilon mismatch");
  CMatrix m = matrix_of(g);
  double scale = std::max(1.0, std::abs(m(0, 0)));
  if (!in_g1(m, g.epsilon, 1e-10 * scale * scale)) throw GroupError("transport needs a G1 element");
  CMatrix A(2, 2);
  A(0, 0) = m(1, 1);
  A(0, 1) = m(1, 2);
  A(1, 0) = m(2, 1);
  A(1, 1) = m(2, 2);
  std::complex<double> b3 = m(3, 3);
  CMatrix u = A * cd.matrix() * A.conjugate().inverse();
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) u(i, j) /= b3;
  return CubicData::from_matrix(u, cd.epsilon, 1e-8);
}

GroupElement<std::complex<double>> normalize_cubic(const CubicData& cd, double tol) {
  using C = std::complex<double>;
  IsotropyClass cls = isotropy_class(cd, tol);
  if (cls == IsotropyClass::Preserving) throw CrError("isotropy-preserving cubic data is not supported");
  if (cls == IsotropyClass::Degenerate) throw CrError("degenerate cubic data cannot be normalized");
  const double eps = cd.epsilon;
  const double size = std::sqrt(std::norm(cd.U1) + std::norm(cd.U) + std::norm(cd.U2));

  auto element = [&](const CMatrix& A, C b3) {
    GroupElement<C> g;
    g.tag = GroupTag::G1;
    g.epsilon = cd.epsilon;
    g.a = A;
    g.b3 = b3;
    return g;
  };

  // shear [[a, b], [-eps conj(b), conj(a)]], r = b/a a root of eps U2 r^2 + 2 U r + U1
  std::vector<C> roots;
  if (std::abs(cd.U1) <= 1e-14 * size) {
    roots.push_back(0.0);
  } else {
    C disc = std::sqrt(cd.U * cd.U - eps * cd.U1 * cd.U2);
    roots.push_back((-cd.U + disc) / (eps * cd.U2));
    roots.push_back((-cd.U - disc) / (eps * cd.U2));
    if (std::abs(roots[1]) < std::abs(roots[0])) std::swap(roots[0], roots[1]);
  }
  for (const C& r : roots) {
    double n = 1.0 + eps * std::norm(r);
    if (n <= 0.0) continue;
    double a = 1.0 / std::sqrt(n);
    C b = r * a;
    CMatrix S(2, 2);
    S(0, 0) = a;
    S(0, 1) = b;
    S(1, 0) = -eps * std::conj(b);
    S(1, 1) = a;
    CubicData mid = transport(cd, element(S, 1.0));
    if (std::abs(mid.U1) > tol * std::max(1.0, size) || std::abs(mid.U2) > tol * std::max(1.0, size)) continue;
    C V = mid.U;
    if (std::abs(V) == 0.0) continue;
    C phase = std::polar(1.0, -std::arg(V) / 2.0);
    CMatrix A = S;
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) A(i, j) *= phase;
    GroupElement<C> g = element(A, std::abs(V));
    CubicData out = transport(cd, g);
    if (std::abs(out.U - 1.0) <= tol && std::abs(out.U1) <= tol && std::abs(out.U2) <= tol) return g;
  }
  throw CrError("normalize_cubic: no G1 element reaches (0, 1, 0)");
}

}  // namespace cartan_cr
