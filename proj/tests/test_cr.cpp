#include <gtest/gtest.h>

#include <random>

#include "cartan_cr/cr.hpp"
#include "oracles.hpp"
#include "random_group.hpp"

using namespace cartan_cr;
using cartan_cr::testing::random_cubic;
using cartan_cr::testing::random_g1;

namespace {

const char* kExample = "-x3*ln(x1*x2/x3^2)";

ScalarExpr P(const std::string& s) { return parse(s, tube_coordinates()); }
ScalarExpr I() { return ScalarExpr::imaginary_unit(); }

bool same(const ScalarExpr& a, const ScalarExpr& b) { return is_zero(a - b); }

bool same_form(const Form& a, const Form& b) {
  Form d = a - b;
  for (const auto& [m, c] : d.terms())
    if (!is_zero(c)) return false;
  return true;
}

Form mono(const TubeCoframe& c, const std::string& a, const std::string& b, const ScalarExpr& k) {
  return Form::monomial(c.basis(), {a, b}, k);
}

EMatrix g1_move(const ScalarExpr& b3) {
  EMatrix M(4, 4);
  M(0, 0) = ScalarExpr(2);
  M(1, 1) = ScalarExpr(1);
  M(1, 2) = I();
  M(2, 1) = ScalarExpr(1);
  M(2, 2) = -I();
  M(3, 3) = b3;
  return M;
}

}  // namespace

TEST(Contact, Examples) {
  const auto& ch = tube_chart();
  auto df = DefiningFunction::parse(kExample);
  Form th = contact_form(df);
  EXPECT_TRUE(same(coefficient_of(th, {"dz1"}), I() * P("x3/x1")));
  EXPECT_TRUE(same(coefficient_of(th, {"dz2"}), I() * P("x3/x2")));
  EXPECT_TRUE(same(coefficient_of(th, {"dz3"}), I() * P("ln(x1*x2/x3^2) - 2")));
  EXPECT_TRUE(same(coefficient_of(th, {"dz4"}), I()));

  Form flat = contact_form(DefiningFunction::parse("0"));
  EXPECT_EQ(flat.terms().size(), 1u);
  EXPECT_TRUE(same(coefficient_of(flat, {"dz4"}), I()));

  Form sq = contact_form(DefiningFunction::parse("x1^2"));
  EXPECT_TRUE(same(coefficient_of(sq, {"dz1"}), ScalarExpr(-2) * I() * P("x1")));
  EXPECT_EQ(sq.terms().size(), 2u);
}

// theta0 is real as a form on the hypersurface: conj(theta0) - theta0 is a
// multiple of the defining equation's differential d(z4 + zb4 - f).
TEST(Contact, RealOnHypersurface) {
  auto df = DefiningFunction::parse(kExample);
  const auto& ch = tube_chart();
  Form th = contact_form(df);
  Form rho = Form::basis_form(ch.basis, "dz4") + Form::basis_form(ch.basis, "dzb4");
  for (int j = 1; j <= 3; ++j) {
    std::string s = std::to_string(j);
    rho -= df.fj(j) * (Form::basis_form(ch.basis, "dz" + s) + Form::basis_form(ch.basis, "dzb" + s));
  }
  EXPECT_TRUE(same_form(conjugate(th) - th, -I() * rho));
}

TEST(Levi, ExampleAndFlat) {
  auto df = DefiningFunction::parse(kExample);
  EMatrix L = levi_matrix(df);
  EXPECT_TRUE(same(L(0, 0), P("x3/x1^2")));
  EXPECT_TRUE(same(L(0, 1), ScalarExpr(0)));
  EXPECT_TRUE(same(L(0, 2), P("-1/x1")));
  EXPECT_TRUE(same(L(1, 2), P("-1/x2")));
  EXPECT_TRUE(same(L(2, 2), P("2/x3")));
  Point p{{"x1", 1.0}, {"x2", 1.0}, {"x3", 1.0}};
  double expect[3][3] = {{1, 0, -1}, {0, 1, -1}, {-1, -1, 2}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(eval(L(i, j), p).real(), expect[i][j], 1e-14);
  EXPECT_NEAR(std::abs(eval(L.determinant(), p)), 0.0, 1e-14);
  EXPECT_EQ(levi_rank(df), 2);

  EMatrix Z = levi_matrix(DefiningFunction::parse("0"));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_TRUE(Z(i, j).is_zero_literal());
  EXPECT_EQ(levi_rank(DefiningFunction::parse("0")), 0);
  EXPECT_EQ(levi_rank(DefiningFunction::parse("x1^2+x2^2+x3^2")), 3);
}

TEST(Levi, SymmetricAndMatchesRealHessian) {
  auto df = DefiningFunction::parse("x1^3*x2 + x2^2*x3^4 - 3*x1*x3 + ln(x1*x3) + exp(x2/5)");
  EMatrix L = levi_matrix(df);
  const auto& c = tube_coordinates();
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      EXPECT_TRUE(is_zero(L(j, k) - L(k, j)));
      // second Wirtinger partial of a tube function = real second partial, checked by differences
      for (const auto& p : oracle::box_points(c, 10, 17 + j * 3 + k)) {
        ScalarExpr fk = diff(df.f, c[k]);
        EXPECT_LT(oracle::relative_error(eval(L(j, k), p), oracle::central_difference(fk, p, c[j])), 1e-5);
      }
    }
}

TEST(Degeneracy, Residual) {
  auto df = DefiningFunction::parse(kExample);
  ZeroTestOptions tight;
  tight.tol = 1e-12;
  EXPECT_TRUE(is_zero(degeneracy_residual(df), df.domain, tight));
  for (const auto& r : detzero_split_residuals(df)) EXPECT_TRUE(is_zero(r, df.domain, tight));

  auto q = DefiningFunction::parse("x1^2+x2^2+x3^2");
  EXPECT_TRUE(same(degeneracy_residual(q), ScalarExpr(8)));
  EXPECT_TRUE(degeneracy_residual(DefiningFunction::parse("0")).is_zero_literal());

  try {
    degeneracy_residual(DefiningFunction::parse("x1*x2"));
    FAIL() << "expected a precondition error";
  } catch (const PreconditionError& e) {
    EXPECT_EQ(e.condition, "f12=0");
  }
}

TEST(DefiningFunction, Validation) {
  EXPECT_THROW(DefiningFunction::parse("x1 + y1"), std::exception);
  EXPECT_THROW(DefiningFunction(I() * P("x1")), CrError);
}

TEST(Diagonalizing, ReproducesFirstApproximation) {
  auto df = DefiningFunction::parse(kExample);
  TubeCoframe c = diagonalizing_coframe(df, {-1, -1});
  const EMatrix& K = c.matrix();
  EXPECT_TRUE(same(K(1, 1), P("x3^(1/2)/x1")));
  EXPECT_TRUE(same(K(1, 3), P("-1/x3^(1/2)")));
  EXPECT_TRUE(same(K(2, 2), P("x3^(1/2)/x2")));
  EXPECT_TRUE(same(K(2, 3), P("-1/x3^(1/2)")));
  EXPECT_TRUE(same(K(0, 0), ScalarExpr(1)));
  EXPECT_TRUE(same(K(3, 3), ScalarExpr(1)));

  // structure equations of the first approximation
  Form d1 = mono(c, "eta3", "eta1b", P("1/x3")) + mono(c, "eta1", "eta1b", P("1/x3^(1/2)")) -
            mono(c, "eta1", "eta3", P("1/(2*x3)")) + mono(c, "eta1", "eta3b", P("1/(2*x3)"));
  Form d2 = mono(c, "eta3", "eta2b", P("1/x3")) + mono(c, "eta2", "eta2b", P("1/x3^(1/2)")) -
            mono(c, "eta2", "eta3", P("1/(2*x3)")) + mono(c, "eta2", "eta3b", P("1/(2*x3)"));
  Form d0 = mono(c, "eta1", "eta1b", I()) + mono(c, "eta2", "eta2b", I());
  EXPECT_TRUE(same_form(c.structure(0), d0));
  EXPECT_TRUE(same_form(c.structure(1), d1));
  EXPECT_TRUE(same_form(c.structure(2), d2));
  EXPECT_TRUE(c.structure(3).is_zero());

  ZeroTestOptions opt;
  for (const auto& [m, coef] : levi_diagonal_residual(c).terms()) EXPECT_LT(max_abs(coef, df.domain, opt), 1e-10);
  EXPECT_EQ(natural_signs(df), (Signs{-1, -1}));
}

// Independent route: differentiate the chart expressions of theta directly and
// compare with the structure equations mapped back to the chart.
TEST(Diagonalizing, StructureAgreesWithChartDifferential) {
  auto df = DefiningFunction::parse(kExample);
  TubeCoframe c = diagonalizing_coframe(df);
  std::map<std::string, Form> back;
  for (int k = 0; k < 4; ++k) {
    back[TubeCoframe::eta_symbol(k)] = c.on_chart(k);
    if (k) back[TubeCoframe::etab_symbol(k)] = conjugate(c.on_chart(k));
  }
  for (int k = 0; k < 4; ++k) {
    Form lhs = d_coordinate(c.on_chart(k), tube_chart());
    Form rhs = substitute_coframe(c.structure(k), back);
    // theta0 is real only modulo the defining relation; compare after pulling
    // dzb4 back through conj(theta0) = theta0.
    Form diff_ = lhs - rhs;
    std::map<std::string, Form> on_m;
    const auto& ch = tube_chart();
    for (std::size_t j = 0; j < ch.basis->size(); ++j) on_m[ch.basis->symbol(j)] = Form::basis_form(ch.basis, ch.basis->symbol(j));
    Form dzb4 = Form::basis_form(ch.basis, "dz4");
    for (int j = 1; j <= 3; ++j) {
      std::string s = std::to_string(j);
      dzb4 = dzb4 - df.fj(j) * (Form::basis_form(ch.basis, "dz" + s) + Form::basis_form(ch.basis, "dzb" + s));
    }
    on_m["dzb4"] = -dzb4;  // dz4 + dzb4 = df on M
    Form r = substitute_coframe(diff_, on_m);
    for (const auto& [m, coef] : r.terms()) EXPECT_TRUE(is_zero(coef)) << "theta" << k;
  }
}

TEST(Diagonalizing, Preconditions) {
  auto df = DefiningFunction::parse(kExample);
  try {
    diagonalizing_coframe(df, {1, -1});
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_EQ(e.condition, "levi_diagonal");
  }
  // the residual itself is nonzero at sample points
  {
    EMatrix K = diagonalizing_coframe(df).matrix();
    K(1, 3) = -K(1, 3);
    TubeCoframe wrong(df, K);
    double worst = 0;
    for (const auto& [m, coef] : levi_diagonal_residual(wrong).terms()) worst = std::max(worst, max_abs(coef));
    EXPECT_GT(worst, 1e-3);
  }
  auto expect_cond = [](const std::string& f, const std::string& cond) {
    try {
      diagonalizing_coframe(DefiningFunction::parse(f));
      FAIL() << f;
    } catch (const PreconditionError& e) {
      EXPECT_EQ(e.condition, cond) << f;
    }
  };
  expect_cond("x1^2+x2^2-x3^2", "f_jj>0");
  expect_cond("x1*x2+x3^2", "f12=0");
  expect_cond("x1^2+x2^2+x3^2", "detzerosatisfied");
}

TEST(TubeCoframe, DSquaredVanishes) {
  auto df = DefiningFunction::parse(kExample);
  TubeCoframe c = diagonalizing_coframe(df).transformed(g1_move(P("1/x3")));
  for (int k = 0; k < 4; ++k) {
    Form dd = c.d(c.structure(k));
    for (const auto& [m, coef] : dd.terms()) EXPECT_TRUE(is_zero(coef));
  }
  EXPECT_THROW(TubeCoframe(df, EMatrix(4, 4)), CrError);
  EMatrix bad = EMatrix::identity(4);
  bad(0, 1) = ScalarExpr(1);
  EXPECT_THROW(TubeCoframe(df, bad), CrError);
}

TEST(Cubic, FirstAndSecondApproximation) {
  auto df = DefiningFunction::parse(kExample);
  TubeCoframe c1 = diagonalizing_coframe(df);
  CubicMatrices m1 = cubic_matrix(c1);
  EXPECT_TRUE(same(m1.ell(0, 0), ScalarExpr(1)));
  EXPECT_TRUE(same(m1.ell(1, 1), ScalarExpr(1)));
  EXPECT_TRUE(m1.ell(0, 1).is_zero_literal());
  EXPECT_TRUE(same(m1.u(0, 0), P("1/x3")));
  EXPECT_TRUE(same(m1.u(1, 1), P("1/x3")));
  EXPECT_TRUE(same(m1.u(0, 1), ScalarExpr(0)));

  TubeCoframe c2 = c1.transformed(g1_move(P("1/x3")));
  CubicMatrices m2 = cubic_matrix(c2);
  EXPECT_TRUE(same(m2.ell(0, 0), ScalarExpr(1)));
  EXPECT_TRUE(same(m2.ell(1, 1), ScalarExpr(1)));
  EXPECT_TRUE(same(m2.u(0, 0), ScalarExpr(0)));
  EXPECT_TRUE(same(m2.u(0, 1), ScalarExpr(1)));
  EXPECT_TRUE(same(m2.u(1, 0), ScalarExpr(1)));
  EXPECT_TRUE(same(m2.u(1, 1), ScalarExpr(0)));

  SymbolicCubic s = symbolic_cubic(c1);
  EXPECT_EQ(s.epsilon, 1);
  ASSERT_TRUE(s.lambda.has_value());
  EXPECT_TRUE(same(*s.lambda, P("1/x3^2")));
  Point p{{"x1", 2.0}, {"x2", 3.0}, {"x3", 0.5}};
  EXPECT_EQ(isotropy_class(s.at(p)), IsotropyClass::Definite);
}

TEST(Cubic, ShapeAndNondegeneracy) {
  auto df = DefiningFunction::parse(kExample);
  EXPECT_THROW(cubic_matrix(TubeCoframe(df, EMatrix::identity(4))), ShapeError);

  // Levi-nondegenerate in the z1, z2 directions with a flat kernel: u = 0
  auto flat = DefiningFunction::parse("x1^2+x2^2");
  EMatrix K = EMatrix::identity(4);
  K(1, 1) = sqrt(ScalarExpr(2));
  K(2, 2) = sqrt(ScalarExpr(2));
  SymbolicCubic s = symbolic_cubic(TubeCoframe(flat, K));
  EXPECT_TRUE(s.U1.is_zero_literal() && s.U.is_zero_literal() && s.U2.is_zero_literal());
  EXPECT_FALSE(s.lambda.has_value());
  EXPECT_EQ(isotropy_class(s.at({{"x1", 1.0}, {"x2", 1.0}, {"x3", 1.0}})), IsotropyClass::Degenerate);
}

TEST(ConformalUnitary, Examples) {
  for (int eps : {1, -1}) {
    EMatrix ell = EMatrix::identity(2);
    ell(1, 1) = ScalarExpr(eps);
    EMatrix u(2, 2);
    u(0, 1) = ScalarExpr(eps);
    u(1, 0) = ScalarExpr(1);
    auto lam = conformal_unitary_check(ell, u);
    ASSERT_TRUE(lam.has_value());
    EXPECT_TRUE(same(*lam, ScalarExpr(eps)));
    auto lam1 = conformal_unitary_check(ell, EMatrix::identity(2));
    ASSERT_TRUE(lam1.has_value());
    EXPECT_TRUE(same(*lam1, ScalarExpr(1)));
    EMatrix r(2, 2);
    r(0, 0) = ScalarExpr(1);
    EXPECT_FALSE(conformal_unitary_check(ell, r).has_value());

    CMatrix ce = CMatrix::identity(2), cu(2, 2);
    ce(1, 1) = double(eps);
    cu(0, 1) = double(eps);
    cu(1, 0) = 1.0;
    auto cl = conformal_unitary_check(ce, cu);
    ASSERT_TRUE(cl.has_value());
    EXPECT_NEAR(std::abs(*cl - double(eps)), 0.0, 1e-15);
  }
}

TEST(Isotropy, Examples) {
  auto cd = [](double u1, double u, double u2, int eps) {
    CubicData c;
    c.epsilon = eps;
    c.U1 = u1;
    c.U = u;
    c.U2 = u2;
    return c;
  };
  EXPECT_EQ(isotropy_class(cd(0, 1, 0, -1)), IsotropyClass::Switching);
  EXPECT_EQ(isotropy_class(cd(1, 0, 1, -1)), IsotropyClass::Preserving);
  EXPECT_EQ(isotropy_class(cd(1, 1, -1, -1)), IsotropyClass::Degenerate);
  EXPECT_EQ(isotropy_class(cd(0, 1, 0, 1)), IsotropyClass::Definite);
  EXPECT_THROW(isotropy_class(cd(1, 0, 2, 1)), CrError);
  EXPECT_THROW(isotropy_class(cd(1, 1, 1, -1)), CrError);
}

TEST(Normalize, Examples) {
  using C = std::complex<double>;
  CubicData base;
  base.epsilon = -1;
  base.U = 1.0;
  auto g = normalize_cubic(base);
  CMatrix m = matrix_of(g);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(std::abs(m(i, j) - (i == j ? 1.0 : 0.0)), 0.0, 1e-12);

  CubicData rot = base;
  rot.U = std::polar(1.0, 0.7);
  auto h = normalize_cubic(rot);
  EXPECT_NEAR(std::abs(h.a(0, 1)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(h.a(1, 0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(h.a(0, 0) - h.a(1, 1)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(h.a(0, 0) - std::polar(1.0, -0.35)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(h.b3 - C(1.0)), 0.0, 1e-12);

  CubicData pres;
  pres.epsilon = -1;
  pres.U1 = 1.0;
  pres.U2 = 1.0;
  EXPECT_THROW(normalize_cubic(pres), CrError);
  CubicData deg;
  deg.epsilon = -1;
  deg.U1 = 1.0;
  deg.U = 1.0;
  deg.U2 = -1.0;
  EXPECT_THROW(normalize_cubic(deg), CrError);
}

// Oracle for the transport law: apply a G1 element to an actual coframe and
// re-extract the cubic coefficients from its structure equations.
TEST(Transport, MatchesRecomputedStructure) {
  auto df = DefiningFunction::parse(kExample);
  TubeCoframe c1 = diagonalizing_coframe(df);
  Point p{{"x1", 1.7}, {"x2", 0.6}, {"x3", 2.3}};
  CubicData before = symbolic_cubic(c1).at(p);

  // A = (1/5) [[3, 4i], [4i, 3]] has conj(A)^T A = I.
  ScalarExpr fifth(Rational(1, 5));
  EMatrix g = EMatrix::identity(4);
  g(1, 0) = ScalarExpr(CRational(Rational(1), Rational(-2)));
  g(2, 0) = ScalarExpr(3);
  g(3, 0) = ScalarExpr(CRational(Rational(1, 3), Rational(1)));
  g(1, 1) = ScalarExpr(3) * fifth;
  g(1, 2) = ScalarExpr(4) * fifth * I();
  g(2, 1) = ScalarExpr(4) * fifth * I();
  g(2, 2) = ScalarExpr(3) * fifth;
  g(3, 1) = ScalarExpr(2);
  g(3, 2) = -I();
  g(3, 3) = ScalarExpr(CRational(Rational(2), Rational(1)));
  CubicData after = symbolic_cubic(c1.transformed(g)).at(p);

  GroupElement<std::complex<double>> ge;
  ge.tag = GroupTag::G1;
  ge.epsilon = 1;
  CMatrix gm = g.map([&](const ScalarExpr& e) { return eval(e, p); });
  ge.t = gm(0, 0);
  ge.c1 = gm(1, 0);
  ge.c2 = gm(2, 0);
  ge.c3 = gm(3, 0);
  ge.a = CMatrix(2, 2);
  ge.a(0, 0) = gm(1, 1);
  ge.a(0, 1) = gm(1, 2);
  ge.a(1, 0) = gm(2, 1);
  ge.a(1, 1) = gm(2, 2);
  ge.b1 = gm(3, 1);
  ge.b2 = gm(3, 2);
  ge.b3 = gm(3, 3);
  CubicData law = transport(before, ge);
  EXPECT_NEAR(std::abs(law.U1 - after.U1), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(law.U - after.U), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(law.U2 - after.U2), 0.0, 1e-12);
}

TEST(Transport, CompositionAndNonG1) {
  std::mt19937_64 rng(5);
  for (int eps : {1, -1}) {
    CubicData cd = random_cubic(eps, true, rng);
    auto g = random_g1(eps, rng), h = random_g1(eps, rng);
    GroupElement<std::complex<double>> hg = g;
    CMatrix m = matrix_of(h) * matrix_of(g);
    hg.t = m(0, 0);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) hg.a(i, j) = m(1 + i, 1 + j);
    hg.b3 = m(3, 3);
    CubicData two = transport(transport(cd, g), h), one = transport(cd, hg);
    EXPECT_NEAR(std::abs(two.U1 - one.U1), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(two.U - one.U), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(two.U2 - one.U2), 0.0, 1e-9);

    auto bad = g;
    bad.a(0, 1) += 0.5;
    EXPECT_THROW(transport(cd, bad), GroupError);
  }
}

TEST(Normalize, RandomTriples) {
  std::mt19937_64 rng(20261014);
  struct Case {
    int eps;
    bool switching;
  };
  for (Case k : {Case{1, true}, Case{-1, true}}) {
    for (int n = 0; n < 1000; ++n) {
      CubicData cd = random_cubic(k.eps, k.switching, rng);
      auto g = normalize_cubic(cd);
      ASSERT_TRUE(in_g1(g, 1e-9));
      CubicData out = transport(cd, g);
      ASSERT_LT(std::abs(out.U - 1.0), 1e-9);
      ASSERT_LT(std::abs(out.U1), 1e-9);
      ASSERT_LT(std::abs(out.U2), 1e-9);
    }
  }
}

TEST(Normalize, RecoversPushForward) {
  std::mt19937_64 rng(99);
  for (int eps : {1, -1}) {
    CubicData base;
    base.epsilon = eps;
    base.U = 1.0;
    for (int n = 0; n < 1000; ++n) {
      CubicData cd = transport(base, random_g1(eps, rng));
      auto g = normalize_cubic(cd);
      CubicData out = transport(cd, g);
      ASSERT_LT(std::abs(out.U - 1.0), 1e-9);
      ASSERT_LT(std::abs(out.U1), 1e-9);
      ASSERT_LT(std::abs(out.U2), 1e-9);
    }
  }
}

TEST(Isotropy, InvariantUnderTransport) {
  std::mt19937_64 rng(7);
  struct Case {
    int eps;
    bool switching;
  };
  for (Case k : {Case{1, true}, Case{-1, true}, Case{-1, false}}) {
    for (int n = 0; n < 1000; ++n) {
      CubicData cd = random_cubic(k.eps, k.switching, rng);
      IsotropyClass c0 = isotropy_class(cd);
      CubicData moved = transport(cd, random_g1(k.eps, rng));
      ASSERT_EQ(isotropy_class(moved), c0);
    }
  }
}
