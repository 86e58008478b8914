// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

#include "cartan_cr/cli.hpp"
#include "golden.hpp"
#include "oracles.hpp"
#include "random_group.hpp"

using namespace cartan_cr;
using namespace golden;
using cartan_cr::testing::random_cubic;
using cartan_cr::testing::random_g1;
using cartan_cr::testing::RationalDraw;

namespace {

struct Outcome {
  bool ok = true;
  std::string note;
  void fail(const std::string& why) {
    if (ok) note = why;
    ok = false;
  }
};

bool exactly_zero(const Form& f) {
  for (const auto& [m, c] : f.terms())
    if (!c.is_zero_literal()) return false;
  return true;
}

bool exactly_zero(const MatrixForm& m) {
  for (std::size_t a = 0; a < m.dim(); ++a)
    for (std::size_t b = 0; b < m.dim(); ++b)
      if (!exactly_zero(m(a, b))) return false;
  return true;
}

double form_max(const Form& f, const Domain& dom, const ZeroTestOptions& opt) {
  double m = 0;
  for (const auto& [mono, c] : f.terms()) m = std::max(m, max_abs(c, dom, opt));
  return m;
}

struct Example {
  DefiningFunction df = DefiningFunction::parse(kExample);
  AdaptationState st;
  CurvatureCoefficients cc;
};

Example& example() {
  static Example e = [] {
    Example x;
    x.st = prolong(run_example_chain(x.df));
    x.cc = curvature_coefficients(x.st);
    return x;
  }();
  return e;
}

const ZeroTestOptions kOpt{100, 1e-9, 0};

Outcome c1_maurer_cartan() {
  Outcome o;
  for (int eps : {1, -1}) {
    auto r = verify_maurer_cartan(eps);
    for (const auto& [s, f] : r.d_squared)
      if (!exactly_zero(f)) o.fail("d^2 " + s + " nonzero for eps " + std::to_string(eps));
    if (!exactly_zero(r.mc_residual)) o.fail("d omega + omega ^ omega nonzero for eps " + std::to_string(eps));
  }
  return o;
}

Outcome c2_curvature_golden() {
  Outcome o;
  auto& ex = example();
  for (const auto& [n, v] : curvature()) {
    ScalarExpr d = field(ex.cc, n) - S(v);
    if (!is_zero(d, ex.df.domain, kOpt)) o.fail(n + " differs from its closed form");
  }
  std::ostringstream os;
  os << "six coefficients, " << kOpt.samples << " points, tol " << kOpt.tol;
  if (o.ok) o.note = os.str();
  return o;
}

Outcome c3_structure_residuals() {
  Outcome o;
  auto& ex = example();
  const TubeCoframe& c = *ex.st.coframe;
  auto se = structure_equations();
  double worst = 0;
  for (int k = 0; k < 4; ++k) {
    double m = form_max(c.structure(k) - build(c.basis(), se[k], 2), ex.df.domain, kOpt);
    worst = std::max(worst, m);
    if (!(m < 1e-9)) o.fail("d eta" + std::to_string(k) + " residual " + std::to_string(m));
  }
  auto rep = verify_se_pullback(ex.st, ex.cc, kOpt);
  bool seen = false;
  for (const auto& e : rep.entries)
    if (e.equation == "d tau") {
      seen = true;
      worst = std::max(worst, e.max_abs);
      if (!e.ok || !(e.max_abs < 1e-9)) o.fail("d tau residual at " + e.monomial);
    }
  if (!seen) o.fail("no d tau entries");
  Form psi_want = build(c.basis(), pseudoconnection_forms().back().second, 1);
  for (const auto& [m, coef] : (*ex.st.psi - psi_want).terms())
    if (!is_zero(coef, ex.df.domain, kOpt)) o.fail("psi differs from its closed form");
  if (o.ok) o.note = "max residual " + std::to_string(worst);
  return o;
}

Outcome c4_degeneracy() {
  Outcome o;
  auto df = DefiningFunction::parse(kExample);
  ZeroTestOptions tight{100, 1e-12, 0};
  if (!is_zero(degeneracy_residual(df), df.domain, tight)) o.fail("degeneracy residual");
  for (const auto& r : detzero_split_residuals(df))
    if (!is_zero(r, df.domain, tight)) o.fail("split identity " + to_string(r));
  return o;
}

Outcome c5_group_tower() {
  Outcome o;
  using C = std::complex<double>;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI), mag(0.5, 2.0);
  auto cx = [&] { return C(nd(rng), nd(rng)); };
  auto unit = [&] { return std::polar(1.0, ang(rng)); };
  auto real_t = [&] { return C((rng() & 1) ? mag(rng) : -mag(rng), 0.0); };
  for (int eps : {1, -1}) {
    HermitianForm h(eps);
    for (int k = 0; k < 1000; ++k) {
      CMatrix g4 = matrix_of(make_g4<C>(eps, real_t(), unit(), unit(), cx(), cx()));
      if (!(in_g4(g4, eps) && in_g3(g4, eps) && in_g2(g4, eps) && in_g1(g4, eps))) o.fail("G4 draw outside the tower");
      CMatrix g3 = matrix_of(make_g3<C>(eps, real_t(), unit(), unit(), cx(), cx(), cx()));
      if (!(in_g3(g3, eps) && in_g2(g3, eps) && in_g1(g3, eps))) o.fail("G3 draw outside G2 or G1");
      CMatrix g2 = matrix_of(make_g2<C>(eps, real_t(), unit(), unit(), cx(), cx(), cx(), cx(), cx()));
      if (!(in_g2(g2, eps) && in_g1(g2, eps))) o.fail("G2 draw outside G1");
      if (!in_g1(random_g1(eps, rng))) o.fail("G1 draw rejected");
      CMatrix p = matrix_of(make_pstar<C>(eps, real_t(), unit(), unit(), C(nd(rng), 0.0), cx(), cx()));
      if (!is_hermitian_frame(p, h, 1e-12)) o.fail("P* draw breaks h or det = 1");
    }
    RationalDraw r(77);
    for (int k = 0; k < 1000; ++k) {
      auto g = make_pstar<CRational>(eps, CRational(r.nonzero()), r.unit(), r.unit(), CRational(r.rat()), r.complex(),
                                     r.complex());
      auto f = pstar_decompose(g);
      QMatrix diff = matrix_of(f.p2) * matrix_of(f.p1) * matrix_of(f.p0) - matrix_of(g);
      for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < 4; ++b)
          if (!diff(a, b).is_zero()) o.fail("pstar_decompose is not exact");
      if (!is_hermitian_frame(matrix_of(g), h)) o.fail("rational P* draw is not a hermitian frame");
    }
  }
  if (o.ok) o.note = "1000 draws per group and sign";
  return o;
}

Outcome c6_equivariance() {
  Outcome o;
  for (int eps : {1, -1}) {
    if (!exactly_zero(equivariance_residual(eps, ScalarExpr::coordinate("y"))))
      o.fail("residual nonzero for eps " + std::to_string(eps));
    if (exactly_zero(equivariance_residual(eps, ScalarExpr::coordinate("y"), true)))
      o.fail("mutated Ad not detected");
  }
  return o;
}

Outcome c7_normalization() {
  Outcome o;
  std::mt19937_64 rng(20261014);
  struct Case {
    int eps;
    bool switching;
    const char* name;
  };
  for (Case k : {Case{1, true, "definite"}, Case{-1, true, "isotropy-switching"}}) {
    for (int n = 0; n < 1000; ++n) {
      CubicData cd = random_cubic(k.eps, k.switching, rng);
      if (to_string(isotropy_class(cd)) != k.name) o.fail(std::string("draw outside class ") + k.name);
      CubicData out = transport(cd, normalize_cubic(cd));
      if (!(std::abs(out.U - 1.0) < 1e-9 && std::abs(out.U1) < 1e-9 && std::abs(out.U2) < 1e-9))
        o.fail(std::string("normal form missed in class ") + k.name);
    }
  }
  for (Case k : {Case{1, true, ""}, Case{-1, true, ""}, Case{-1, false, ""}})
    for (int n = 0; n < 1000; ++n) {
      CubicData cd = random_cubic(k.eps, k.switching, rng);
      if (isotropy_class(transport(cd, random_g1(k.eps, rng))) != isotropy_class(cd)) o.fail("class changed under G1");
    }
  if (o.ok) o.note = "definite and isotropy-switching, 1000 triples each";
  return o;
}

Outcome c8_flatness() {
  Outcome o;
  for (int eps : {1, -1}) {
    auto cc = curvature_coefficients(verify_maurer_cartan(eps).mc_residual);
    if (!is_flat(cc)) o.fail("model not flat for eps " + std::to_string(eps));
  }
  auto& ex = example();
  if (is_flat(ex.cc, ex.df.domain, kOpt)) o.fail("example reported flat");
  auto [a, b] = fundamental_invariants(ex.cc, ex.st.coframe->eta(0));
  ScalarExpr ca = coefficient_of(a, {"eta0"}), cb = coefficient_of(b, {"eta0"}), want = S("1/(8*x3)");
  if (!is_zero(ca - want, ex.df.domain, kOpt) || !is_zero(cb - want, ex.df.domain, kOpt)) o.fail("|F|^2 != 1/(8 x3)");
  for (const auto& p : sample_points(tube_coordinates(), ex.df.domain, 100, 0, {ca}))
    if (std::abs(eval(ca, p)) < 1e-6) o.fail("invariant vanishes on the domain");
  return o;
}

Outcome c9_calculus_oracles() {
  Outcome o;
  auto& ex = example();
  const auto& X = tube_coordinates();
  std::vector<std::pair<std::string, ScalarExpr>> corpus = expression_corpus(ex.st, ex.cc);
  corpus.emplace_back("f", ex.df.f);
  for (int j = 1; j <= 3; ++j)
    for (int k = j; k <= 3; ++k) corpus.emplace_back("f" + std::to_string(j) + std::to_string(k), ex.df.fjk(j, k));

  double worst = 0;
  std::size_t checked = 0;
  for (const auto& [name, e] : corpus) {
    if (e.is_constant()) continue;
    for (const auto& x : X) {
      if (!e.depends_on(x)) continue;
      ScalarExpr de = diff(e, x);
      for (const auto& p : sample_points(X, ex.df.domain, 20, 1, {e, de})) {
        double err = oracle::relative_error(eval(de, p), oracle::richardson_difference(e, p, x));
        worst = std::max(worst, err);
        ++checked;
        if (!(err < 1e-5)) o.fail("d/d" + x + " of " + name + " rel err " + std::to_string(err));
      }
    }
  }

  // every expression string the CLI writes parses back to itself
  std::vector<std::string> strings;
  for (const char* cmd : {"check-example", "analyze", "verify-mc", "equivariance"}) {
    cli::RunConfig cfg;
    cfg.command = cmd;
    auto res = cli::run_command(cfg);
    if (res.exit_code != 0) o.fail(std::string(cmd) + " exited " + std::to_string(res.exit_code));
    for (auto& s : cli::report_expressions(res.report)) strings.push_back(s);
  }
  cli::RunConfig flat;
  flat.command = "analyze";
  flat.f = "0";
  for (auto& s : cli::report_expressions(cli::run_command(flat).report)) strings.push_back(s);
  std::set<std::string> uniq(strings.begin(), strings.end());
  for (const auto& s : uniq) {
    ScalarExpr e = parse(s, X);
    if (to_string(e) != s || parse(to_string(e), X) != e) o.fail("round trip fails on " + s);
  }
  if (o.ok) {
    std::ostringstream os;
    os << checked << " derivative samples, worst rel err " << worst << "; " << uniq.size() << " report strings";
    o.note = os.str();
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
    double budget_s;
  };
  const Criterion criteria[] = {
      {1, "Maurer-Cartan residuals exactly zero, eps = +1 and -1", c1_maurer_cartan, 5},
      {2, "example curvature coefficients match closed forms", c2_curvature_golden, 60},
      {3, "4-adapted structure equations, d tau, psi", c3_structure_residuals, 0},
      {4, "Levi degeneracy and split identities", c4_degeneracy, 0},
      {5, "group tower membership, P* frames, decomposition", c5_group_tower, 0},
      {6, "equivariance in symbolic y", c6_equivariance, 0},
      {7, "cubic normalization and isotropy invariance", c7_normalization, 0},
      {8, "flatness dichotomy and invariants 1/(8 x3)", c8_flatness, 0},
      {9, "diff vs finite differences, parser round trip", c9_calculus_oracles, 0},
  };
  bool all = true;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && dt > c.budget_s) o.fail("over the " + std::to_string(int(c.budget_s)) + " s budget");
    all = all && o.ok;
    std::printf("%s %d %s (%.3f s)%s%s\n", o.ok ? "PASS" : "FAIL", c.id, c.title, dt, o.note.empty() ? "" : ": ",
                o.note.c_str());
  }
  return all ? 0 : 1;
}
