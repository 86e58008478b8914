#include "cartan_cr/groups.hpp"

namespace cartan_cr {

std::string to_string(GroupTag tag) {
  switch (tag) {
    case GroupTag::G0: return "G0";
    case GroupTag::G1: return "G1";
    case GroupTag::G2: return "G2";
    case GroupTag::G3: return "G3";
    case GroupTag::G4: return "G4";
    case GroupTag::G4prolong: return "G4prolong";
    case GroupTag::PStar: return "PStar";
  }
  return "?";
}

bool in_su_star(const MatrixForm& omega, const HermitianForm& h) { return in_su_star(omega, h.matrix<ScalarExpr>()); }

bool in_su_star(const MatrixForm& omega, const EMatrix& H) {
  if (omega.dim() != 4 || H.rows() != 4 || H.cols() != 4) return false;
  MatrixForm lhs = transpose(conjugate(omega)) * H + H * omega;
  if (!lhs.is_zero()) return false;
  Form tr = omega(0, 0) + omega(1, 1) + omega(2, 2) + omega(3, 3);
  return tr.is_zero();
}

// ---- parallelism ---------------------------------------------------------------

const std::vector<std::string>& parallelism_symbols() {
  static const std::vector<std::string> s{"eta0",  "eta1",   "eta2",   "eta3",    "eta1b",   "eta2b",   "eta3b", "tau",
                                          "rho",   "sigma",  "gamma1", "gamma2",  "gamma1b", "gamma2b", "psi"};
  return s;
}

BasisPtr parallelism_basis(ConjugateMap function_partners) {
  return make_basis({{"eta0", ""},
                     {"eta1", "eta1b"},
                     {"eta2", "eta2b"},
                     {"eta3", "eta3b"},
                     {"eta1b", "eta1"},
                     {"eta2b", "eta2"},
                     {"eta3b", "eta3"},
                     {"tau", ""},
                     {"rho", ""},
                     {"sigma", ""},
                     {"gamma1", "gamma1b"},
                     {"gamma2", "gamma2b"},
                     {"gamma1b", "gamma1"},
                     {"gamma2b", "gamma2"},
                     {"psi", ""}},
                    std::move(function_partners));
}

namespace {

ScalarExpr Q(std::int64_t n, std::int64_t d = 1) { return ScalarExpr(Rational(n, d)); }
ScalarExpr I() { return ScalarExpr::imaginary_unit(); }

const char* kSlots[] = {"eta0", "eta1", "eta2", "eta3", "tau", "rho", "sigma", "gamma1", "gamma2", "psi"};

}  // namespace

MatrixForm assemble_omega(const std::map<std::string, Form>& slots, int epsilon) {
  HermitianForm{epsilon};
  BasisPtr basis;
  for (const char* s : kSlots) {
    auto it = slots.find(s);
    if (it == slots.end()) throw FormError(std::string("assemble_omega: missing slot ") + s);
    if (it->second.degree() != 1 && !it->second.is_zero()) throw FormError(std::string("slot ") + s + " is not a one-form");
    if (!basis) basis = it->second.basis();
  }
  if (!basis) throw FormError("assemble_omega: slots carry no coframe");
  auto get = [&](const char* s) {
    const Form& f = slots.at(s);
    return f.basis() ? f : Form(basis, 1);
  };
  Form eta0 = get("eta0"), eta1 = get("eta1"), eta2 = get("eta2"), eta3 = get("eta3"), tau = get("tau"),
       rho = get("rho"), sigma = get("sigma"), g1 = get("gamma1"), g2 = get("gamma2"), psi = get("psi");
  Form eta1b = conjugate(eta1), eta2b = conjugate(eta2), eta3b = conjugate(eta3), g1b = conjugate(g1),
       g2b = conjugate(g2);
  ScalarExpr eps(epsilon), i = I();

  MatrixForm w(basis, 4, 1);
  w(0, 0) = -tau - (i * Q(1, 4)) * rho + (i * Q(1, 4)) * sigma;
  w(0, 1) = -i * g2;
  w(0, 2) = -i * g1b;
  w(0, 3) = -i * psi;
  w(1, 0) = -eps * eta2b;
  w(1, 1) = -(i * Q(1, 4)) * rho - (i * Q(3, 4)) * sigma;
  w(1, 2) = eps * eta3b;
  w(1, 3) = -(eps * i) * g2b;
  w(2, 0) = eta1;
  w(2, 1) = eta3;
  w(2, 2) = (i * Q(3, 4)) * rho + (i * Q(1, 4)) * sigma;
  w(2, 3) = i * g1;
  w(3, 0) = -i * eta0;
  w(3, 1) = eta2;
  w(3, 2) = eta1b;
  w(3, 3) = tau - (i * Q(1, 4)) * rho + (i * Q(1, 4)) * sigma;
  return w;
}

MatrixForm assemble_omega(const BasisPtr& basis, int epsilon) {
  std::map<std::string, Form> slots;
  for (const char* s : kSlots) slots.emplace(s, Form::basis_form(basis, s));
  return assemble_omega(slots, epsilon);
}

AbstractCoframe maurer_cartan_coframe(int epsilon, bool corrupt) {
  HermitianForm{epsilon};
  BasisPtr b = parallelism_basis();
  auto f = [&](const char* s) { return Form::basis_form(b, s); };
  auto w = [&](const Form& x, const char* s) { return wedge(x, f(s)); };
  ScalarExpr eps(epsilon), i = I(), h = i * Q(1, 2);

  std::map<std::string, Form> se;
  se["eta0"] = w(Q(-2) * f("tau"), "eta0") + w(i * f("eta1"), "eta1b") + w((eps * i) * f("eta2"), "eta2b");
  se["eta1"] = w(-f("gamma1"), "eta0") - wedge(f("tau") + i * f("rho"), f("eta1")) + w(eps * f("eta3"), "eta2b");
  se["eta2"] = w(-f("gamma2"), "eta0") - wedge(f("tau") + i * f("sigma"), f("eta2")) + w(f("eta3"), "eta1b");
  se["eta3"] = w(-i * f("gamma2"), "eta1") - w(i * f("gamma1"), "eta2") - w(i * f("rho") + i * f("sigma"), "eta3");
  se["tau"] = w(-f("psi"), "eta0") + w(h * f("gamma1"), "eta1b") - w(h * f("gamma1b"), "eta1") +
              w((eps * h) * f("gamma2"), "eta2b") - w((eps * h) * f("gamma2b"), "eta2");
  // the table gives i d(rho) and i d(sigma)
  Form i_drho = w((Q(-3, 2) * i) * f("gamma1"), "eta1b") - w((Q(3, 2) * i) * f("gamma1b"), "eta1") +
                w((eps * h) * f("gamma2"), "eta2b") + w((eps * h) * f("gamma2b"), "eta2") + w(eps * f("eta3b"), "eta3");
  Form i_dsigma = w(h * f("gamma1"), "eta1b") + w(h * f("gamma1b"), "eta1") -
                  w((eps * Q(3, 2) * i) * f("gamma2"), "eta2b") - w((eps * Q(3, 2) * i) * f("gamma2b"), "eta2") +
                  w(eps * f("eta3b"), "eta3");
  se["rho"] = -i * i_drho;
  se["sigma"] = -i * i_dsigma;
  se["gamma1"] = w(-f("psi"), "eta1") + wedge(f("tau") - i * f("rho"), f("gamma1")) - w(eps * f("gamma2b"), "eta3");
  se["gamma2"] = w(-f("psi"), "eta2") + wedge(f("tau") - i * f("sigma"), f("gamma2")) - w(f("gamma1b"), "eta3");
  se["psi"] = w(Q(-2) * f("psi"), "tau") + w(i * f("gamma1"), "gamma1b") + w((eps * i) * f("gamma2"), "gamma2b");
  if (corrupt) se["gamma2"] = w(-f("psi"), "eta2") + wedge(f("tau") - i * f("sigma"), f("gamma2")) + w(f("gamma1b"), "eta3");
  return AbstractCoframe(b, std::move(se));
}

bool MaurerCartanReport::ok() const {
  for (const auto& [s, r] : d_squared)
    if (!r.is_zero()) return false;
  return mc_residual.is_zero();
}

MaurerCartanReport verify_maurer_cartan(int epsilon, bool corrupt) {
  AbstractCoframe cf = maurer_cartan_coframe(epsilon, corrupt);
  MaurerCartanReport rep;
  rep.epsilon = epsilon;
  rep.d_squared = d_squared_residuals(cf);
  rep.mc_residual = curvature(assemble_omega(cf.basis(), epsilon), [&](const Form& f) { return cf.d(f); });
  return rep;
}

std::map<std::string, Form> prolong_pullback(const BasisPtr& basis, const ScalarExpr& y) {
  std::map<std::string, Form> out;
  for (std::size_t k = 0; k < basis->size(); ++k) out.emplace(basis->symbol(k), Form::basis_form(basis, basis->symbol(k)));
  auto f = [&](const char* s) { return Form::basis_form(basis, s); };
  out["tau"] = f("tau") - y * f("eta0");
  out["gamma1"] = f("gamma1") - y * f("eta1");
  out["gamma2"] = f("gamma2") - y * f("eta2");
  out["gamma1b"] = f("gamma1b") - y * f("eta1b");
  out["gamma2b"] = f("gamma2b") - y * f("eta2b");
  out["psi"] = f("psi") - (Q(2) * y) * f("tau") + (y * y) * f("eta0");
  return out;
}

MatrixForm adjoint(const EMatrix& g, const MatrixForm& x) {
  if (g.rows() != x.dim() || g.cols() != x.dim()) throw FormError("adjoint: dimension mismatch");
  EMatrix ginv;
  try {
    ginv = g.inverse();
  } catch (const std::domain_error&) {
    throw GroupError("adjoint: singular matrix");
  }
  return g * x * ginv;
}

MatrixForm equivariance_residual(int epsilon, const ScalarExpr& y, bool mutate) {
  BasisPtr b = parallelism_basis();
  MatrixForm omega = assemble_omega(b, epsilon);
  auto dict = prolong_pullback(b, y);
  MatrixForm pulled = omega.map([&](const Form& f) { return f.is_zero() ? f : substitute_coframe(f, dict); });
  EMatrix P = pstar2_matrix<ScalarExpr>(y);
  if (mutate) P = P.inverse();
  return pulled - adjoint(P, omega);
}

}  // namespace cartan_cr
