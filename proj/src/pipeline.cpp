#include "cartan_cr/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace cartan_cr {

namespace {

ScalarExpr I() { return ScalarExpr::imaginary_unit(); }
ScalarExpr Q(std::int64_t n, std::int64_t d = 1) { return ScalarExpr(Rational(n, d)); }

bool zero(const ScalarExpr& e, const Domain& dom, const ZeroTestOptions& opt) {
  return e.is_zero_literal() || is_zero(e, dom, opt);
}

const std::vector<std::string>& eta_names() {
  static const std::vector<std::string> n{"eta0", "eta1", "eta2", "eta3", "eta1b", "eta2b", "eta3b"};
  return n;
}

Form bf(const BasisPtr& b, const std::string& s) { return Form::basis_form(b, s); }
Form w(const Form& a, const Form& b) { return wedge(a, b); }

Monomial bits(const BasisPtr& b, const std::string& x, const std::string& y) {
  return (Monomial(1) << b->index(x)) | (Monomial(1) << b->index(y));
}

std::string mono_name(const Form& f, Monomial m) {
  std::string s;
  for (const auto& x : f.symbols(m)) s += (s.empty() ? "" : "^") + x;
  return s;
}

// Every coefficient of `residual` outside `free_monos` must vanish.
void check_form(ResidualReport& rep, const std::string& label, const Form& residual, const Domain& dom,
                const ZeroTestOptions& opt, const std::vector<Monomial>& free_monos = {}) {
  bool any = false;
  for (const auto& [m, c] : residual.terms()) {
    if (std::find(free_monos.begin(), free_monos.end(), m) != free_monos.end()) continue;
    any = true;
    ResidualEntry e{label, mono_name(residual, m), 0.0, true};
    if (!c.is_zero_literal()) {
      e.max_abs = max_abs(c, dom, opt);
      e.ok = is_zero(c, dom, opt);
    }
    rep.entries.push_back(e);
  }
  if (!any) rep.entries.push_back({label, "", 0.0, true});
}

std::string first_failure(const ResidualReport& r) {
  for (const auto& e : r.entries)
    if (!e.ok) return e.equation + (e.monomial.empty() ? "" : " [" + e.monomial + "]");
  return "";
}

// ---- B4 absorption ----------------------------------------------------------------

std::array<Form, 4> b4se_terms(const BasisPtr& B, const Pseudoconnection& pc, const Torsion& t, int epsilon) {
  ScalarExpr eps(epsilon), i = I();
  Form e0 = bf(B, "eta0"), e1 = bf(B, "eta1"), e2 = bf(B, "eta2"), e3 = bf(B, "eta3");
  Form eb1 = bf(B, "eta1b"), eb2 = bf(B, "eta2b");
  std::array<Form, 4> r;
  r[0] = w(Q(2) * pc.tau, e0) - (i * w(e1, eb1) + (eps * i) * w(e2, eb2));
  r[1] = w(pc.gamma1, e0) + w(pc.tau + i * pc.rho, e1) - (eps * w(e3, eb2) + t.F1 * w(eb1, e2));
  r[2] = w(pc.gamma2, e0) + w(pc.tau + i * pc.sigma, e2) - (w(e3, eb1) + t.F2 * w(eb2, e1));
  r[3] = i * w(pc.gamma2, e1) + i * w(pc.gamma1, e2) + w(i * pc.rho + i * pc.sigma, e3) -
         (t.f3 * w(e3, e0) + (i * t.t3) * w(e1, e2) + t.T31b * w(eb1, e0) + t.T32b * w(eb2, e0) +
          t.F31 * w(eb2, e1) + t.F32 * w(eb1, e2));
  return r;
}

// 63 real parameters: tau, rho, sigma (7 each), gamma1, gamma2 (14 each), torsion (14).
constexpr int kUnknowns = 63;

std::pair<Pseudoconnection, Torsion> from_parameters(const BasisPtr& B, const std::vector<ScalarExpr>& v) {
  const auto& n = eta_names();
  ScalarExpr i = I();
  auto real_form = [&](int off) {
    Form f = v[off] * bf(B, "eta0");
    for (int k = 1; k <= 3; ++k) {
      const ScalarExpr &a = v[off + 2 * k - 1], &b = v[off + 2 * k];
      f += (a + i * b) * bf(B, n[k]) + (a - i * b) * bf(B, n[k + 3]);
    }
    return f;
  };
  auto complex_form = [&](int off) {
    Form f(B, 1);
    for (int j = 0; j < 7; ++j) f += (v[off + 2 * j] + i * v[off + 2 * j + 1]) * bf(B, n[j]);
    return f;
  };
  auto cx = [&](int off) { return v[off] + i * v[off + 1]; };
  Pseudoconnection pc{real_form(0), real_form(7), real_form(14), complex_form(21), complex_form(35)};
  Torsion t{cx(49), cx(51), v[53], v[54], cx(55), cx(57), cx(59), cx(61)};
  return {pc, t};
}

Form conj_form(const Form& f) { return conjugate(f); }

// Solves an affine system in complex unknowns and their partners; every
// equation is checked after substitution.
std::map<std::string, ScalarExpr> solve_affine(const std::string& stage,
                                               const std::vector<std::pair<std::string, ScalarExpr>>& eqs,
                                               const ConjugateMap& partners, const Domain& dom,
                                               const ZeroTestOptions& opt) {
  ConjugateMap both = partners;
  std::vector<std::string> vars;
  for (const auto& [u, ub] : partners) {
    both.emplace(ub, u);
    vars.push_back(u);
    vars.push_back(ub);
  }
  std::vector<std::pair<std::string, ScalarExpr>> rows;
  for (const auto& [label, e] : eqs) {
    rows.emplace_back(label, e);
    rows.emplace_back("conj(" + label + ")", conj(e, both));
  }
  std::map<std::string, ScalarExpr> zeros;
  for (const auto& v : vars) zeros[v] = ScalarExpr(0);

  const std::size_t n = rows.size(), m = vars.size();
  EMatrix A(n, m);
  std::vector<ScalarExpr> rhs(n);
  for (std::size_t r = 0; r < n; ++r) {
    const ScalarExpr& e = rows[r].second;
    rhs[r] = -substitute(e, zeros);
    for (std::size_t c = 0; c < m; ++c) {
      ScalarExpr d = diff(e, vars[c]);
      for (const auto& v : vars)
        if (!zero(diff(d, v), dom, opt)) throw PipelineError(stage, rows[r].first + " is not affine in the unknowns");
      A(r, c) = d;
    }
  }
  std::vector<int> pivot(m, -1);
  std::vector<bool> used(n, false);
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t r = 0;
    while (r < n && (used[r] || zero(A(r, c), dom, opt))) ++r;
    if (r == n) throw PipelineError(stage, "the coefficient equations do not determine " + vars[c]);
    used[r] = true;
    pivot[c] = int(r);
    ScalarExpr p = A(r, c);
    for (std::size_t k = 0; k < m; ++k) A(r, k) = A(r, k) / p;
    rhs[r] = rhs[r] / p;
    for (std::size_t rr = 0; rr < n; ++rr) {
      if (rr == r || A(rr, c).is_zero_literal()) continue;
      ScalarExpr f = A(rr, c);
      for (std::size_t k = 0; k < m; ++k) A(rr, k) = A(rr, k) - f * A(r, k);
      rhs[rr] = rhs[rr] - f * rhs[r];
    }
  }
  std::map<std::string, ScalarExpr> all;
  for (std::size_t c = 0; c < m; ++c) all[vars[c]] = rhs[std::size_t(pivot[c])];
  for (const auto& [label, e] : rows)
    if (!zero(substitute(e, all), dom, opt)) throw PipelineError(stage, "cannot eliminate " + label);
  std::map<std::string, ScalarExpr> out;
  for (const auto& [u, ub] : partners) {
    if (!zero(conj(all[u], both) - all[ub], dom, opt))
      throw PipelineError(stage, "solution for " + u + " is not conjugate to " + ub);
    out[u] = all[u];
  }
  return out;
}

// Group relations checked on sampled values of a symbolic matrix.
void check_group(const std::string& stage, const EMatrix& M, int eps, int level, const Domain& dom,
                 const ZeroTestOptions& opt) {
  std::vector<ScalarExpr> probe;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) probe.push_back(M(i, j));
  for (const Point& p : sample_points(tube_coordinates(), dom, opt.samples, opt.seed, probe)) {
    CMatrix m = M.map([&](const ScalarExpr& e) { return eval(e, p); });
    double scale = 1.0;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) scale = std::max(scale, std::abs(m(i, j)));
    double tol = 1e-10 * scale * scale;
    bool ok = level == 1 ? in_g1(m, eps, tol) : level == 2 ? in_g2(m, eps, tol) : in_g3(m, eps, tol);
    if (!ok) throw PipelineError(stage, "move leaves G" + std::to_string(level));
  }
}

Form eta0_part(const Form& d, const BasisPtr& B) {
  // d = eta0 ^ X + (terms free of eta0); returns X without its eta0 component
  Form X(B, 1);
  for (std::size_t k = 1; k < eta_names().size(); ++k) {
    const std::string& s = eta_names()[k];
    ScalarExpr c = coefficient_of(d, {"eta0", s});
    if (!c.is_zero_literal()) X += c * bf(B, s);
  }
  return X;
}

void require_span(const std::string& stage, const std::string& label, const Form& f,
                  const std::vector<Monomial>& allowed, const Domain& dom, const ZeroTestOptions& opt) {
  for (const auto& [m, c] : f.terms()) {
    if (std::find(allowed.begin(), allowed.end(), m) != allowed.end()) continue;
    if (!zero(c, dom, opt)) throw PipelineError(stage, label + " has a " + mono_name(f, m) + " term");
  }
}

}  // namespace

// ---- reports ------------------------------------------------------------------------

bool ResidualReport::ok() const {
  return std::all_of(entries.begin(), entries.end(), [](const ResidualEntry& e) { return e.ok; });
}

std::vector<ResidualEntry> ResidualReport::failures() const {
  std::vector<ResidualEntry> f;
  for (const auto& e : entries)
    if (!e.ok) f.push_back(e);
  return f;
}

double ResidualReport::max_residual() const {
  double m = 0;
  for (const auto& e : entries) m = std::max(m, e.max_abs);
  return m;
}

// ---- structure equations ---------------------------------------------------------------

std::array<Form, 4> b4se_residual(const AbstractCoframe& cf, const Pseudoconnection& pc, const Torsion& t,
                                  int epsilon) {
  auto r = b4se_terms(cf.basis(), pc, t, epsilon);
  for (int k = 0; k < 4; ++k) r[k] = cf.structure(eta_names()[k]) + r[k];
  return r;
}

Pseudoconnection model_pseudoconnection(const AbstractCoframe& mc) {
  const BasisPtr& b = mc.basis();
  return {bf(b, "tau"), bf(b, "rho"), bf(b, "sigma"), bf(b, "gamma1"), bf(b, "gamma2")};
}

Torsion zero_torsion() {
  ScalarExpr z(0);
  return {z, z, z, z, z, z, z, z};
}

ResidualReport verify_adapted(const AbstractCoframe& cf, int epsilon, int k,
                              const std::optional<std::pair<Pseudoconnection, Torsion>>& given, const Domain& dom,
                              const ZeroTestOptions& opt) {
  if (k != 0 && k != 1 && k != 2 && k != 4) throw std::invalid_argument("verify_adapted: k must be 0, 1, 2 or 4");
  HermitianForm{epsilon};
  const BasisPtr& B = cf.basis();
  for (const auto& s : eta_names()) B->index(s);
  ScalarExpr eps(epsilon), i = I();
  Form e1 = bf(B, "eta1"), e2 = bf(B, "eta2"), e3 = bf(B, "eta3"), eb1 = bf(B, "eta1b"), eb2 = bf(B, "eta2b");
  ResidualReport rep;

  Form d0 = reduce_mod_ideal(cf.structure("eta0"), {"eta0"});
  std::vector<Monomial> levi;
  for (const char* a : {"eta1", "eta2"})
    for (const char* b : {"eta1b", "eta2b"}) levi.push_back(bits(B, a, b));
  if (k == 0)
    check_form(rep, "d eta0 mod eta0", d0, dom, opt, levi);
  else
    check_form(rep, "d eta0 mod eta0", d0 - (i * w(e1, eb1) + (eps * i) * w(e2, eb2)), dom, opt);

  std::vector<Monomial> cub{bits(B, "eta3", "eta1b"), bits(B, "eta3", "eta2b")};
  for (int j = 1; j <= 2; ++j) {
    std::string label = "d eta" + std::to_string(j) + " mod eta0,eta1,eta2";
    Form dj = reduce_mod_ideal(cf.structure(eta_names()[j]), {"eta0", "eta1", "eta2"});
    if (k < 2)
      check_form(rep, label, dj, dom, opt, cub);
    else
      check_form(rep, label, dj - (j == 1 ? eps * w(e3, eb2) : w(e3, eb1)), dom, opt);
  }
  check_form(rep, "d eta3 mod eta0..eta3", reduce_mod_ideal(cf.structure("eta3"), {"eta0", "eta1", "eta2", "eta3"}),
             dom, opt);

  if (k == 4) {
    std::pair<Pseudoconnection, Torsion> pt;
    if (given) {
      pt = *given;
    } else {
      try {
        pt = solve_pseudoconnection(cf, epsilon, dom, opt);
      } catch (const PipelineError& e) {
        rep.entries.push_back({"B4 pseudoconnection", e.detail, 0.0, false});
        return rep;
      }
    }
    auto r = b4se_residual(cf, pt.first, pt.second, epsilon);
    for (int j = 0; j < 4; ++j) check_form(rep, "B4 d eta" + std::to_string(j), r[j], dom, opt);
  }
  return rep;
}

ResidualReport verify_adapted(const AdaptationState& state, int k, const ZeroTestOptions& opt) {
  if (!state.coframe) throw PreconditionError("level", "state carries no coframe");
  if (state.level < k) throw PreconditionError("level", "state is below the requested adaptation level");
  std::optional<std::pair<Pseudoconnection, Torsion>> given;
  if (k == 4 && state.pseudoconnection && state.torsion) given = std::make_pair(*state.pseudoconnection, *state.torsion);
  return verify_adapted(state.coframe->coframe(), state.epsilon, k, given, state.coframe->defining_function().domain,
                        opt);
}

// ---- pseudoconnection ----------------------------------------------------------------------

std::pair<Pseudoconnection, Torsion> solve_pseudoconnection(const AbstractCoframe& cf, int epsilon, const Domain& dom,
                                                            const ZeroTestOptions& opt) {
  const BasisPtr& B = cf.basis();
  if (B->size() != eta_names().size())
    throw PipelineError("pseudoconnection", "coframe must consist of eta0..eta3 and conjugates only");
  std::vector<Monomial> monos;
  for (std::size_t a = 0; a < 7; ++a)
    for (std::size_t b = a + 1; b < 7; ++b) monos.push_back(bits(B, eta_names()[a], eta_names()[b]));

  std::vector<ScalarExpr> v(kUnknowns, ScalarExpr(0));
  auto [pc0, t0] = from_parameters(B, v);
  auto base = b4se_terms(B, pc0, t0, epsilon);

  // rows: (equation, monomial, re/im); plus tau_0 = 0
  const std::size_t nrows = 4 * monos.size() * 2 + 1;
  std::vector<std::vector<Rational>> A(nrows, std::vector<Rational>(kUnknowns));
  std::vector<ScalarExpr> b(nrows, ScalarExpr(0));
  for (int k = 0; k < kUnknowns; ++k) {
    v.assign(kUnknowns, ScalarExpr(0));
    v[k] = ScalarExpr(1);
    auto [pc, t] = from_parameters(B, v);
    auto col = b4se_terms(B, pc, t, epsilon);
    for (int e = 0; e < 4; ++e) {
      Form diff_ = col[e] - base[e];
      for (std::size_t m = 0; m < monos.size(); ++m) {
        auto it = diff_.terms().find(monos[m]);
        if (it == diff_.terms().end()) continue;
        if (!it->second.is_constant()) throw PipelineError("pseudoconnection", "non-constant absorption coefficient");
        const CRational& c = it->second.value();
        std::size_t row = (e * monos.size() + m) * 2;
        A[row][k] = c.re;
        A[row + 1][k] = c.im;
      }
    }
  }
  for (int e = 0; e < 4; ++e) {
    Form rest = cf.structure(eta_names()[e]) + base[e];
    for (const auto& [m, c] : rest.terms()) {
      auto pos = std::find(monos.begin(), monos.end(), m);
      if (pos == monos.end()) throw PipelineError("pseudoconnection", "unexpected monomial");
      std::size_t row = (e * monos.size() + std::size_t(pos - monos.begin())) * 2;
      b[row] = real_part(c);
      b[row + 1] = imag_part(c);
    }
  }
  A[nrows - 1][0] = Rational(1);

  // Gauss-Jordan on [A | T]; T tracks the row operations.
  std::vector<std::vector<Rational>> T(nrows, std::vector<Rational>(nrows));
  for (std::size_t r = 0; r < nrows; ++r) T[r][r] = Rational(1);
  std::vector<int> pivot(kUnknowns, -1);
  std::vector<bool> used(nrows, false);
  for (int c = 0; c < kUnknowns; ++c) {
    std::size_t r = 0;
    while (r < nrows && (used[r] || A[r][c].is_zero())) ++r;
    if (r == nrows) throw PipelineError("pseudoconnection", "extraction ambiguity in parameter " + std::to_string(c));
    used[r] = true;
    pivot[c] = int(r);
    Rational p = A[r][c];
    for (auto& x : A[r]) x /= p;
    for (auto& x : T[r]) x /= p;
    for (std::size_t rr = 0; rr < nrows; ++rr) {
      if (rr == r || A[rr][c].is_zero()) continue;
      Rational f = A[rr][c];
      for (int k = 0; k < kUnknowns; ++k)
        if (!A[r][k].is_zero()) A[rr][k] -= f * A[r][k];
      for (std::size_t k = 0; k < nrows; ++k)
        if (!T[r][k].is_zero()) T[rr][k] -= f * T[r][k];
    }
  }
  auto combine = [&](std::size_t r) {
    std::vector<ScalarExpr> terms;
    for (std::size_t j = 0; j < nrows; ++j)
      if (!T[r][j].is_zero() && !b[j].is_zero_literal()) terms.push_back(ScalarExpr(T[r][j]) * b[j]);
    return add(std::move(terms));
  };
  for (std::size_t r = 0; r < nrows; ++r) {
    if (used[r]) continue;
    if (!zero(combine(r), dom, opt)) throw PipelineError("pseudoconnection", "structure equations are not absorbable");
  }
  for (int c = 0; c < kUnknowns; ++c) v[c] = -combine(std::size_t(pivot[c]));
  return from_parameters(B, v);
}

Pseudoconnection pseudoconnection(const AdaptationState& state) {
  if (state.level < 4 || !state.coframe) throw PreconditionError("level", "pseudoconnection needs a 4-adapted coframe");
  if (state.pseudoconnection) return *state.pseudoconnection;
  return solve_pseudoconnection(state.coframe->coframe(), state.epsilon, state.coframe->defining_function().domain)
      .first;
}

Form solve_psi(const AdaptationState& state, const ZeroTestOptions& opt) {
  if (!state.coframe || !state.pseudoconnection || !state.torsion)
    throw PreconditionError("pseudoconnection", "solve_psi needs the pseudoconnection");
  const TubeCoframe& c = *state.coframe;
  const Domain& dom = c.defining_function().domain;
  const BasisPtr& B = c.basis();
  const Pseudoconnection& pc = *state.pseudoconnection;
  const Torsion& t = *state.torsion;
  ScalarExpr eps(state.epsilon), h = I() * Q(1, 2), i = I();
  Form e0 = c.eta(0), e1 = c.eta(1), e2 = c.eta(2), e3 = c.eta(3), eb1 = c.etab(1), eb2 = c.etab(2);
  Form g1b = conj_form(pc.gamma1), g2b = conj_form(pc.gamma2);

  Form K = h * w(pc.gamma1, eb1) - h * w(g1b, e1) + (eps * h) * w(pc.gamma2, eb2) - (eps * h) * w(g2b, e2);
  Form D = c.d(pc.tau) - K;  // = eta0 ^ psi
  Form rest = reduce_mod_ideal(D, {"eta0"});
  for (const auto& [m, coef] : rest.terms())
    if (!zero(coef, dom, opt)) throw PipelineError("psi", "d tau has a " + mono_name(rest, m) + " term");
  Form psi = eta0_part(D, B);

  Form X = c.d(pc.gamma1) - w(pc.tau - i * pc.rho, pc.gamma1) + eps * w(g2b, e3) - (i * t.F32) * w(g1b, e0) -
           t.F1 * w(g1b, e2) + t.F1 * w(pc.gamma2, eb1);
  ScalarExpr psi0 = -real_part(coefficient_of(X, {"eta0", "eta1"}));
  return psi + psi0 * e0;
}

AdaptationState prolong(AdaptationState state, const ZeroTestOptions& opt) {
  if (state.level < 4 || !state.coframe) throw PreconditionError("level", "prolong needs a 4-adapted coframe");
  auto [pc, t] = solve_pseudoconnection(state.coframe->coframe(), state.epsilon,
                                        state.coframe->defining_function().domain, opt);
  state.pseudoconnection = pc;
  state.torsion = t;
  state.psi = solve_psi(state, opt);
  state.level = 5;
  return state;
}

// ---- the chain ---------------------------------------------------------------------------

AdaptationState run_example_chain(const DefiningFunction& df, const ZeroTestOptions& opt) {
  const Domain& dom = df.domain;
  if (!zero(degeneracy_residual(df), dom, opt))
    throw PreconditionError("degenerate", "the Levi form is nondegenerate; the chain needs det(f_jk) = 0");
  AdaptationState st;
  TubeCoframe c1 = diagonalizing_coframe(df, natural_signs(df));
  SymbolicCubic s1 = symbolic_cubic(c1, dom, opt);
  st.epsilon = s1.epsilon;
  st.first = c1;
  st.coframe = c1;
  st.level = 1;
  ScalarExpr i = I();

  // G1: fixed A, b3 read off the transported cubic
  const std::string st1 = "normalize-cubic";
  if (st.epsilon != 1) throw PipelineError(st1, "the fixed move needs a definite Levi form");
  EMatrix A{{ScalarExpr(1), i}, {ScalarExpr(1), -i}};
  EMatrix u = cubic_matrix(c1).u;
  EMatrix ut = A * u * A.conjugate().inverse();
  if (!zero(ut(0, 0), dom, opt) || !zero(ut(1, 1), dom, opt) || !zero(ut(0, 1) - ut(1, 0), dom, opt))
    throw PipelineError(st1, "the first-approximation cubic is not a multiple of the identity");
  ScalarExpr b3 = ut(1, 0);
  if (zero(b3, dom, opt)) throw PipelineError(st1, "the cubic form vanishes");
  GroupElement<ScalarExpr> g1;
  g1.tag = GroupTag::G1;
  g1.epsilon = st.epsilon;
  g1.t = ScalarExpr(2);
  g1.a = A;
  g1.b3 = b3;
  EMatrix M1 = matrix_of(g1);
  check_group(st1, M1, st.epsilon, 1, dom, opt);
  TubeCoframe c2 = c1.transformed(M1);
  st.applied.push_back({st1, g1, M1, {{"b3", b3}}});
  st.coframe = c2;
  st.level = 2;
  if (auto r = verify_adapted(c2.coframe(), st.epsilon, 2, std::nullopt, dom, opt); !r.ok())
    throw PipelineError(st1, "not 2-adapted: " + first_failure(r));

  // G2: c1, c2 kill eta_j ^ eta_jb in d eta_j mod eta0
  const std::string st2 = "absorb-c1-c2";
  GroupElement<ScalarExpr> g2;
  g2.tag = GroupTag::G2;
  g2.epsilon = st.epsilon;
  g2.c1 = ScalarExpr::coordinate("c1");
  g2.c2 = ScalarExpr::coordinate("c2");
  ConjugateMap p2{{"c1", "c1b"}, {"c2", "c2b"}};
  TubeCoframe c3s = c2.transformed(matrix_of(g2), p2);
  auto sol2 = solve_affine(st2,
                           {{"d eta1 [eta1^eta1b]", coefficient_of(reduce_mod_ideal(c3s.structure(1), {"eta0"}),
                                                                   {"eta1", "eta1b"})},
                            {"d eta2 [eta2^eta2b]", coefficient_of(reduce_mod_ideal(c3s.structure(2), {"eta0"}),
                                                                   {"eta2", "eta2b"})}},
                           p2, dom, opt);
  g2.c1 = sol2["c1"];
  g2.c2 = sol2["c2"];
  EMatrix M2 = matrix_of(g2);
  check_group(st2, M2, st.epsilon, 2, dom, opt);
  TubeCoframe c3 = c3s.substituted(sol2);
  st.applied.push_back({st2, g2, M2, sol2});
  st.coframe = c3;
  st.level = 3;
  if (auto r = verify_adapted(c3.coframe(), st.epsilon, 2, std::nullopt, dom, opt); !r.ok())
    throw PipelineError(st2, "lost 2-adaptation: " + first_failure(r));

  // G3: c3 kills eta_j ^ eta_jb in d eta3 + i gamma2 ^ eta1 + i gamma1 ^ eta2 mod eta0
  const std::string st3 = "absorb-c3";
  GroupElement<ScalarExpr> g3;
  g3.tag = GroupTag::G3;
  g3.epsilon = st.epsilon;
  g3.c3 = ScalarExpr::coordinate("c3");
  ConjugateMap p3{{"c3", "c3b"}};
  TubeCoframe c4s = c3.transformed(matrix_of(g3), p3);
  const BasisPtr& B = c4s.basis();
  Form gam1 = eta0_part(c4s.structure(1), B), gam2 = eta0_part(c4s.structure(2), B);
  Form E = reduce_mod_ideal(c4s.structure(3) + i * w(gam2, c4s.eta(1)) + i * w(gam1, c4s.eta(2)), {"eta0"});
  auto sol3 = solve_affine(st3,
                           {{"d eta3 [eta1^eta1b]", coefficient_of(E, {"eta1", "eta1b"})},
                            {"d eta3 [eta2^eta2b]", coefficient_of(E, {"eta2", "eta2b"})}},
                           p3, dom, opt);
  g3.c3 = sol3["c3"];
  EMatrix M3 = matrix_of(g3);
  check_group(st3, M3, st.epsilon, 3, dom, opt);
  TubeCoframe c4 = c4s.substituted(sol3);
  st.applied.push_back({st3, g3, M3, sol3});
  st.coframe = c4;
  st.level = 4;
  if (auto r = verify_adapted(c4.coframe(), st.epsilon, 4, std::nullopt, dom, opt); !r.ok())
    throw PipelineError(st3, "not 4-adapted: " + first_failure(r));
  return st;
}

// ---- curvature --------------------------------------------------------------------------

MatrixForm pulled_back_omega(const AdaptationState& state) {
  if (state.level < 5 || !state.psi) throw PreconditionError("level", "omega needs psi");
  const TubeCoframe& c = *state.coframe;
  const Pseudoconnection& pc = *state.pseudoconnection;
  std::map<std::string, Form> slots{{"eta0", c.eta(0)},     {"eta1", c.eta(1)},     {"eta2", c.eta(2)},
                                    {"eta3", c.eta(3)},     {"tau", pc.tau},        {"rho", pc.rho},
                                    {"sigma", pc.sigma},    {"gamma1", pc.gamma1},  {"gamma2", pc.gamma2},
                                    {"psi", *state.psi}};
  return assemble_omega(slots, state.epsilon);
}

MatrixForm curvature_matrix(const AdaptationState& state) {
  const TubeCoframe& c = *state.coframe;
  return curvature(pulled_back_omega(state), [&](const Form& f) { return c.d(f); });
}

CurvatureCoefficients curvature_coefficients(const MatrixForm& C, const Domain& dom, const ZeroTestOptions& opt) {
  const BasisPtr& B = C.basis();
  const std::string st = "curvature";
  require_span(st, "C(3,0)", C(3, 0), {}, dom, opt);
  CurvatureCoefficients cc;
  cc.F1 = coefficient_of(C(2, 0), {"eta1b", "eta2"});
  require_span(st, "C(2,0)", C(2, 0), {bits(B, "eta1b", "eta2")}, dom, opt);
  cc.F2 = coefficient_of(C(3, 1), {"eta2b", "eta1"});
  require_span(st, "C(3,1)", C(3, 1), {bits(B, "eta2b", "eta1")}, dom, opt);
  cc.T3_1b = coefficient_of(C(2, 1), {"eta1b", "eta0"});
  cc.T3_2b = coefficient_of(C(2, 1), {"eta2b", "eta0"});
  cc.F31 = coefficient_of(C(2, 1), {"eta2b", "eta1"});
  cc.F32 = coefficient_of(C(2, 1), {"eta1b", "eta2"});
  require_span(st, "C(2,1)", C(2, 1),
               {bits(B, "eta1b", "eta0"), bits(B, "eta2b", "eta0"), bits(B, "eta2b", "eta1"),
                bits(B, "eta1b", "eta2")},
               dom, opt);
  return cc;
}

CurvatureCoefficients curvature_coefficients(const AdaptationState& state, const ZeroTestOptions& opt) {
  return curvature_coefficients(curvature_matrix(state), state.coframe->defining_function().domain, opt);
}

bool is_flat(const CurvatureCoefficients& cc, const Domain& dom, const ZeroTestOptions& opt) {
  bool z1 = zero(cc.F1, dom, opt), z2 = zero(cc.F2, dom, opt);
  if (z1 != z2) throw PipelineError("flatness", "F1 and F2 must vanish together");
  return z1;
}

std::pair<Form, Form> fundamental_invariants(const CurvatureCoefficients& cc, const Form& eta0) {
  return {(cc.F1 * conj(cc.F1)) * eta0, (cc.F2 * conj(cc.F2)) * eta0};
}

ResidualReport verify_se_pullback(const AdaptationState& state, const CurvatureCoefficients& cc,
                                  const ZeroTestOptions& opt) {
  if (state.level < 5 || !state.psi) throw PreconditionError("level", "verify_se_pullback needs psi");
  const TubeCoframe& c = *state.coframe;
  const Domain& dom = c.defining_function().domain;
  const BasisPtr& B = c.basis();
  const Pseudoconnection& pc = *state.pseudoconnection;
  const Form& psi = *state.psi;
  ScalarExpr eps(state.epsilon), i = I(), h = i * Q(1, 2), z(0);
  Form e0 = c.eta(0), e1 = c.eta(1), e2 = c.eta(2), e3 = c.eta(3), eb1 = c.etab(1), eb2 = c.etab(2),
       eb3 = c.etab(3);
  Form g1 = pc.gamma1, g2 = pc.gamma2, g1b = conj_form(g1), g2b = conj_form(g2);
  const ScalarExpr &F1 = cc.F1, &F2 = cc.F2, &T1 = cc.T3_1b, &T2 = cc.T3_2b, &F31 = cc.F31, &F32 = cc.F32;
  ScalarExpr F1b = conj(F1), F2b = conj(F2);
  ResidualReport rep;

  Torsion t{F1, F2, z, z, T1, T2, F31, F32};
  auto r = b4se_residual(c.coframe(), pc, t, state.epsilon);
  for (int k = 0; k < 4; ++k) check_form(rep, "d eta" + std::to_string(k), r[k], dom, opt);

  Form K = h * w(g1, eb1) - h * w(g1b, e1) + (eps * h) * w(g2, eb2) - (eps * h) * w(g2b, e2);
  check_form(rep, "d tau", c.d(pc.tau) - (-w(psi, e0) + K), dom, opt);

  auto span = [&](std::initializer_list<std::pair<const char*, const char*>> l) {
    std::vector<Monomial> v;
    for (const auto& [a, b] : l) v.push_back(bits(B, a, b));
    return v;
  };
  ScalarExpr a1 = F1 * F1b, a2 = F2 * F2b;

  Form rho_known = (Q(-3, 2) * i) * w(g1, eb1) - (Q(3, 2) * i) * w(g1b, e1) + (eps * h) * w(g2, eb2) +
                   (eps * h) * w(g2b, e2) + eps * w(eb3, e3) + (F1 * F2) * w(eb2, eb1) + (F1b * F2b) * w(e1, e2) +
                   a1 * w(eb2, e2) - a2 * w(eb1, e1);
  check_form(rep, "i d rho", i * c.d(pc.rho) - rho_known, dom, opt,
             span({{"eta1b", "eta0"}, {"eta1", "eta0"}, {"eta2b", "eta0"}, {"eta2", "eta0"}, {"eta2b", "eta1"},
                   {"eta1b", "eta2"}}));

  Form sigma_known = h * w(g1, eb1) + h * w(g1b, e1) - (eps * Q(3, 2) * i) * w(g2, eb2) -
                     (eps * Q(3, 2) * i) * w(g2b, e2) + eps * w(eb3, e3) + (F1 * F2) * w(eb1, eb2) +
                     (F1b * F2b) * w(e2, e1) + a2 * w(eb1, e1) - a1 * w(eb2, e2);
  check_form(rep, "i d sigma", i * c.d(pc.sigma) - sigma_known, dom, opt,
             span({{"eta1b", "eta0"}, {"eta1", "eta0"}, {"eta2b", "eta0"}, {"eta2", "eta0"}, {"eta2b", "eta1"},
                   {"eta1b", "eta2"}}));

  Form g1_known = -w(psi, e1) + w(pc.tau - i * pc.rho, g1) - eps * w(g2b, e3) + (i * F32) * w(g1b, e0) +
                  F1 * w(g1b, e2) - F1 * w(g2, eb1) - (eps * T1) * w(eb1, eb2) + (eps * i * T1) * w(eb3, e0);
  check_form(rep, "d gamma1", c.d(g1) - g1_known, dom, opt,
             span({{"eta1", "eta0"}, {"eta1b", "eta0"}, {"eta2b", "eta0"}, {"eta3", "eta0"}, {"eta1b", "eta1"},
                   {"eta2b", "eta1"}, {"eta2", "eta1"}, {"eta0", "eta2"}, {"eta1b", "eta2"}}));

  Form g2_known = -w(psi, e2) + w(pc.tau - i * pc.sigma, g2) - w(g1b, e3) + (i * F31) * w(g2b, e0) -
                  F2 * w(g1, eb2) + F2 * w(g2b, e1) - T2 * w(eb2, eb1) + (i * T2) * w(eb3, e0);
  check_form(rep, "d gamma2", c.d(g2) - g2_known, dom, opt,
             span({{"eta1b", "eta0"}, {"eta2", "eta0"}, {"eta2b", "eta0"}, {"eta3", "eta0"}, {"eta1b", "eta2"},
                   {"eta1", "eta2"}, {"eta2b", "eta2"}, {"eta0", "eta1"}, {"eta2b", "eta1"}}));

  ScalarExpr half(Rational(1, 2));
  Form psi_known = Q(-2) * w(psi, pc.tau) + i * w(g1, g1b) + (eps * i) * w(g2, g2b) + (half * conj(F32)) * w(g1, e1) +
                   (half * F32) * w(g1b, eb1) + (eps * half * conj(F31)) * w(g2, e2) +
                   (eps * half * F31) * w(g2b, eb2) + (eps * half * conj(T1)) * w(e3, e1) +
                   (eps * half * T1) * w(eb3, eb1) + (eps * half * conj(T2)) * w(e3, e2) +
                   (eps * half * T2) * w(eb3, eb2);
  check_form(rep, "d psi", c.d(psi) - psi_known, dom, opt,
             span({{"eta1", "eta0"}, {"eta1b", "eta0"}, {"eta2", "eta0"}, {"eta2b", "eta0"}, {"eta3", "eta0"},
                   {"eta3b", "eta0"}, {"eta1b", "eta2b"}, {"eta2", "eta1"}, {"eta2", "eta1b"}, {"eta1", "eta2b"},
                   {"eta3b", "eta2"}, {"eta3", "eta2b"}, {"eta3", "eta1b"}, {"eta3b", "eta1"}}));
  return rep;
}

std::vector<std::pair<std::string, ScalarExpr>> expression_corpus(const AdaptationState& state,
                                                                  const CurvatureCoefficients& cc) {
  std::vector<std::pair<std::string, ScalarExpr>> out;
  auto push = [&](const std::string& n, const ScalarExpr& e) {
    if (!e.is_zero_literal()) out.emplace_back(n, e);
  };
  auto push_form = [&](const std::string& n, const Form& f) {
    for (const auto& [m, c] : f.terms()) push(n + "[" + mono_name(f, m) + "]", c);
  };
  if (state.coframe) {
    const EMatrix& K = state.coframe->matrix();
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b < 4; ++b) push("K(" + std::to_string(a) + "," + std::to_string(b) + ")", K(a, b));
    for (int k = 0; k < 4; ++k) push_form("d eta" + std::to_string(k), state.coframe->structure(k));
  }
  for (const auto& s : state.applied)
    for (const auto& [n, e] : s.solved) push(s.name + "." + n, e);
  if (state.pseudoconnection) {
    const auto& pc = *state.pseudoconnection;
    push_form("tau", pc.tau);
    push_form("rho", pc.rho);
    push_form("sigma", pc.sigma);
    push_form("gamma1", pc.gamma1);
    push_form("gamma2", pc.gamma2);
  }
  if (state.psi) push_form("psi", *state.psi);
  push("F1", cc.F1);
  push("F2", cc.F2);
  push("T3_1b", cc.T3_1b);
  push("T3_2b", cc.T3_2b);
  push("F31", cc.F31);
  push("F32", cc.F32);
  push("|F1|^2", cc.F1 * conj(cc.F1));
  push("|F2|^2", cc.F2 * conj(cc.F2));
  return out;
}

}  // namespace cartan_cr
