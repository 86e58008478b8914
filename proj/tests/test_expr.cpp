#include <gtest/gtest.h>

#include <thread>

#include "cartan_cr/expr.hpp"
#include "oracles.hpp"

using namespace cartan_cr;

namespace {

const std::vector<std::string> kChart{"x1", "x2", "x3", "y1", "y2", "y3"};
ScalarExpr P(const std::string& s) { return parse(s, kChart); }

const char* kF = "-x3*ln(x1*x2/x3^2)";

ComplexChart tube3() {
  ComplexChart c;
  for (int j = 1; j <= 3; ++j) c.coords.push_back({"z" + std::to_string(j), "x" + std::to_string(j), "y" + std::to_string(j)});
  return c;
}

}  // namespace

TEST(Parse, ConstantsAndCoordinates) {
  EXPECT_TRUE(P("0").is_zero_literal());
  EXPECT_EQ(P("0").kind(), Kind::Constant);
  EXPECT_EQ(P("3/6").value(), CRational(Rational(1, 2)));
  EXPECT_EQ(P("x1").kind(), Kind::Coordinate);
  EXPECT_EQ(P("i*i"), ScalarExpr(-1));
}

TEST(Parse, DefiningFunctionShape) {
  ScalarExpr f = P(kF);
  EXPECT_EQ(coordinates(f), (std::set<std::string>{"x1", "x2", "x3"}));
  Point p{{"x1", 1.0}, {"x2", 1.0}, {"x3", 1.0}};
  EXPECT_NEAR(std::abs(eval(f, p)), 0.0, 1e-15);
  p = {{"x1", 2.0}, {"x2", 3.0}, {"x3", 0.5}};
  EXPECT_NEAR(eval(f, p).real(), -0.5 * std::log(6.0 / 0.25), 1e-14);
}

TEST(Parse, RawTreeKeepsQuotientAndSqrt) {
  ScalarExpr raw = parse_raw("sqrt(x3)/x1", kChart);
  ASSERT_EQ(raw.kind(), Kind::Quotient);
  EXPECT_EQ(raw.args()[0].kind(), Kind::Sqrt);
  EXPECT_EQ(raw.args()[1].kind(), Kind::Coordinate);
  ScalarExpr canon = canonicalize(raw);
  EXPECT_EQ(parse(to_string(canon), kChart), canon);
  EXPECT_EQ(P("sqrt(x3)/x1"), canon);
}

TEST(Parse, RoundTripCorpus) {
  const char* corpus[] = {kF,
                          "sqrt(x3)/x1",
                          "(1+i)/(4*sqrt(x3))",
                          "-(1-i)/(64*x3^(3/2))",
                          "x1^2+x2^2+x3^2",
                          "exp(x1-2*x2)*ln(x3)",
                          "i/(8*x3) - 1/x1 + 3/7",
                          "(x1+x2)^3/(x1-x2)",
                          "x3^-2",
                          "-x1",
                          "((2+3*i)*x1 - 5)^2*sqrt(x1*x2)"};
  for (const char* s : corpus) {
    ScalarExpr e = P(s);
    std::string printed = to_string(e);
    EXPECT_EQ(P(printed), e) << s << " printed as " << printed;
    EXPECT_EQ(to_string(P(printed)), printed);
  }
}

TEST(Parse, ErrorsCarryOffsets) {
  try {
    P("x1 + * x2");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset, 5u);
  }
  try {
    P("x1 + w7");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset, 5u);
    EXPECT_NE(std::string(e.what()).find("unknown coordinate"), std::string::npos);
  }
  EXPECT_THROW(P("ln x1"), ParseError);
  EXPECT_THROW(P("(x1"), ParseError);
  EXPECT_THROW(P("x1^x2"), ParseError);
  EXPECT_THROW(P("1/0"), ParseError);
  EXPECT_THROW(P("x1 x2"), ParseError);
}

TEST(Diff, ExampleDerivatives) {
  ScalarExpr f = P(kF);
  EXPECT_EQ(diff(f, "x1"), P("-x3/x1"));
  EXPECT_EQ(diff(diff(f, "x1"), "x1"), P("x3/x1^2"));
  EXPECT_EQ(diff(diff(f, "x1"), "x3"), P("-1/x1"));
  EXPECT_EQ(diff(diff(f, "x3"), "x3"), P("2/x3"));
  EXPECT_TRUE(diff(P("7/3+i"), "x1").is_zero_literal());
}

TEST(Diff, FiniteDifferenceOracle) {
  ScalarExpr f = P(kF);
  std::vector<ScalarExpr> exprs{f, diff(f, "x1"), diff(f, "x3"), P("(1+i)/(4*sqrt(x3))*x1^3"), P("exp(x1/x2)*ln(x3*x1)")};
  auto pts = oracle::box_points({"x1", "x2", "x3"}, 20, 11);
  for (const auto& e : exprs)
    for (const char* c : {"x1", "x2", "x3"}) {
      ScalarExpr d = diff(e, c);
      for (const auto& p : pts) EXPECT_LT(oracle::relative_error(eval(d, p), oracle::central_difference(e, p, c)), 1e-6) << to_string(e) << " d/d" << c;
    }
  ScalarExpr d2 = diff(diff(f, "x1"), "x1");
  for (const auto& p : pts) EXPECT_LT(oracle::relative_error(eval(d2, p), oracle::central_difference(diff(f, "x1"), p, "x1")), 1e-6);
}

TEST(Diff, Linearity) {
  ScalarExpr a = P("x1^2*ln(x3)"), b = P("sqrt(x1*x2)/x3");
  ScalarExpr lhs = diff(ScalarExpr(Rational(3, 2)) * a - ScalarExpr(5) * b, "x1");
  ScalarExpr rhs = ScalarExpr(Rational(3, 2)) * diff(a, "x1") - ScalarExpr(5) * diff(b, "x1");
  EXPECT_EQ(lhs, rhs);
}

TEST(Diff, MixedPartialsCommute) {
  for (const char* s : {kF, "exp(x1*x2)*sqrt(x3)/x1", "ln(x1+x2^2)*x3^(5/3)"}) {
    ScalarExpr e = P(s);
    ScalarExpr d12 = diff(diff(e, "x1"), "x2"), d21 = diff(diff(e, "x2"), "x1");
    EXPECT_TRUE(is_zero(d12 - d21)) << s;
  }
}

TEST(Wirtinger, TubeFunctionsReduceToRealPartials) {
  ComplexChart chart = tube3();
  ScalarExpr f = P(kF);
  for (int j = 1; j <= 3; ++j) {
    std::string z = "z" + std::to_string(j), x = "x" + std::to_string(j);
    EXPECT_EQ(wirtinger(f, chart, z), diff(f, x));
    EXPECT_EQ(wirtinger_bar(f, chart, z), diff(f, x));
  }
  EXPECT_TRUE(wirtinger(P("5-2*i"), chart, "z1").is_zero_literal());
  EXPECT_THROW(wirtinger(f, chart, "z9"), std::invalid_argument);
}

TEST(Wirtinger, SquareOfX3) {
  // with x3 = z3 + conj(z3), d/dz3 (x3^2) = 2*x3
  ComplexChart chart = tube3();
  ScalarExpr e = P("x3*x3");
  ScalarExpr w = wirtinger(e, chart, "z3");
  EXPECT_EQ(w, P("2*x3"));
  // independent oracle: finite differences in z3 = (x3 + i*y3)/2 along real and imaginary directions
  ScalarExpr g = P("x3^2*y3 + i*x1*y3^2");
  ScalarExpr wg = wirtinger(g, chart, "z3");
  for (const auto& p : oracle::box_points({"x1", "x3", "y3"}, 10, 5)) {
    ComplexValue dx = oracle::central_difference(g, p, "x3"), dy = oracle::central_difference(g, p, "y3");
    // x = z + zbar, y = (z - zbar)/i  =>  d/dz = d/dx - i d/dy
    ComplexValue fd = dx - ComplexValue(0, 1) * dy;
    EXPECT_LT(oracle::relative_error(eval(wg, p), fd), 1e-6);
  }
}

TEST(Eval, ClosedFormValues) {
  ComplexValue v = eval(P("-(1-i)/(4*sqrt(x3))"), {{"x3", 1.0}});
  EXPECT_NEAR(v.real(), -0.25, 1e-15);
  EXPECT_NEAR(v.imag(), 0.25, 1e-15);
  EXPECT_EQ(eval(P("0"), {}), ComplexValue(0, 0));
  EXPECT_NEAR(std::abs(eval(P("ln(x1*x2/x3^2)"), {{"x1", 1}, {"x2", 1}, {"x3", 1}})), 0.0, 1e-15);
}

TEST(Eval, DomainErrors) {
  EXPECT_THROW(eval(P("ln(x1)"), {{"x1", -1.0}}), DomainError);
  EXPECT_THROW(eval(P("sqrt(x1)"), {{"x1", 0.0}}), DomainError);
  EXPECT_THROW(eval(P("1/x1"), {{"x1", 0.0}}), DomainError);
  EXPECT_THROW(eval(parse_raw("x2/(x1-x1)", kChart), {{"x1", 2.0}, {"x2", 1.0}}), DomainError);
}

TEST(ZeroTest, KnownIdentities) {
  ScalarExpr f = P(kF);
  auto d = [&](const char* a, const char* b) { return diff(diff(f, a), b); };
  ZeroTestOptions opt;
  opt.tol = 1e-12;
  ScalarExpr det = d("x1", "x1") * d("x2", "x2") * d("x3", "x3") - d("x1", "x1") * d("x2", "x3") * d("x2", "x3") -
                   d("x2", "x2") * d("x1", "x3") * d("x1", "x3");
  EXPECT_TRUE(is_zero(det, {}, opt));
  EXPECT_TRUE(is_zero(d("x1", "x3") * d("x1", "x3") - ScalarExpr(Rational(1, 2)) * d("x1", "x1") * d("x3", "x3"), {}, opt));
  EXPECT_FALSE(is_zero(ScalarExpr(1), {}, opt));
  EXPECT_FALSE(is_zero(P("ln(x1) - ln(x2)")));
  EXPECT_TRUE(is_zero(P("ln(x1*x2) - ln(x1) - ln(x2)")));
}

TEST(ZeroTest, ReproducibleAndPredicateAware) {
  ScalarExpr e = P("sqrt(x1) - 1/10");
  ZeroTestOptions opt;
  opt.tol = 1e-9;
  Domain tight;
  tight.boxes["x1"] = {0.01, 0.01000000000001};
  EXPECT_TRUE(is_zero(e, tight, opt));
  EXPECT_EQ(is_zero(P("x1-x2"), {}, opt), is_zero(P("x1-x2"), {}, opt));
  Domain impossible;
  impossible.predicate = [](const Point&) { return false; };
  EXPECT_THROW(is_zero(P("ln(x1)+x2^(1/2)"), impossible), SamplerError);
  EXPECT_THROW(is_zero(e, {}, ZeroTestOptions{0, 1e-9, 0}), std::invalid_argument);
}

TEST(ZeroTest, ParallelVerdictsAgree) {
  ScalarExpr e = P("sqrt(x1*x2) - sqrt(x1)*sqrt(x2) + exp(x3)*exp(-x3) - 1");
  bool serial = is_zero(e);
  std::vector<int> verdicts(4);
  std::vector<std::thread> pool;
  for (int k = 0; k < 4; ++k) pool.emplace_back([&, k] { verdicts[std::size_t(k)] = is_zero(e) ? 1 : 0; });
  for (auto& t : pool) t.join();
  for (int v : verdicts) EXPECT_EQ(v, serial ? 1 : 0);
  EXPECT_TRUE(serial);
}

TEST(Conj, InvolutionAndEvaluation) {
  ConjugateMap partners{{"c1", "c1b"}, {"c1b", "c1"}};
  std::vector<std::string> chart{"x1", "x3", "c1", "c1b"};
  ScalarExpr e = parse("(2-3*i)*x1*c1 + i*sqrt(x3)*c1b^2", chart);
  EXPECT_EQ(conj(conj(e, partners), partners), e);
  ScalarExpr g = P("(1+i)/(4*sqrt(x3)) + i*exp(i*x1)");
  for (const auto& p : oracle::box_points({"x1", "x3"}, 20, 3)) {
    ComplexValue a = eval(conj(g), p), b = std::conj(eval(g, p));
    EXPECT_NEAR(std::abs(a - b), 0.0, 1e-12);
  }
  EXPECT_EQ(real_part(P("(3+4*i)*x1")), P("3*x1"));
  EXPECT_EQ(imag_part(P("(3+4*i)*x1")), P("4*x1"));
}

TEST(Canonical, Normalization) {
  EXPECT_EQ(P("x1*x2 - x2*x1"), ScalarExpr(0));
  EXPECT_EQ(P("sqrt(x3)*sqrt(x3)"), P("x3"));
  EXPECT_EQ(P("(x1+1)^2"), P("x1^2+2*x1+1"));
  EXPECT_EQ(P("sqrt(4)"), ScalarExpr(2));
  EXPECT_EQ(P("(x1^2)^(1/2)"), P("x1"));
  EXPECT_TRUE(is_laurent_polynomial(P("x1^-2*x3 + 4")));
  EXPECT_FALSE(is_laurent_polynomial(P("sqrt(x3)")));
}
