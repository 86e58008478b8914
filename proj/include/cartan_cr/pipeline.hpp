#pragma once
#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cartan_cr/cr.hpp"

namespace cartan_cr {

// A chain stage could not be carried out; `stage` names it, `detail` names
// the offending coefficient or relation.
struct PipelineError : CrError {
  std::string stage, detail;
  PipelineError(std::string st, std::string det)
      : CrError(st + ": " + det), stage(std::move(st)), detail(std::move(det)) {}
};

// rho and sigma are the real forms; the structure equations use i rho, i sigma.
struct Pseudoconnection {
  Form tau, rho, sigma, gamma1, gamma2;
};

struct Torsion {
  ScalarExpr F1, F2, f3, t3, T31b, T32b, F31, F32;  // f3, t3 real
};

struct StageRecord {
  std::string name;
  GroupElement<ScalarExpr> element;
  EMatrix matrix;
  std::map<std::string, ScalarExpr> solved;
};

struct AdaptationState {
  int level = 0;  // 0..4; 5 once psi is known
  int epsilon = 1;
  std::optional<TubeCoframe> first;
  std::optional<TubeCoframe> coframe;
  std::optional<Pseudoconnection> pseudoconnection;
  std::optional<Torsion> torsion;
  std::optional<Form> psi;
  std::vector<StageRecord> applied;
};

struct ResidualEntry {
  std::string equation;
  std::string monomial;
  double max_abs = 0;
  bool ok = true;
};

struct ResidualReport {
  std::vector<ResidualEntry> entries;
  bool ok() const;
  std::vector<ResidualEntry> failures() const;
  double max_residual() const;
};

// ---- structure-equation checks -------------------------------------------------
//
// The coframe's basis must contain eta0..eta3 and eta1b..eta3b. For k = 4 a
// pseudoconnection and torsion are solved for when none are supplied
// (semibasic coframes only).
ResidualReport verify_adapted(const AbstractCoframe& cf, int epsilon, int k,
                              const std::optional<std::pair<Pseudoconnection, Torsion>>& given = std::nullopt,
                              const Domain& domain = {}, const ZeroTestOptions& opt = {});
ResidualReport verify_adapted(const AdaptationState& state, int k, const ZeroTestOptions& opt = {});

// d eta + Omega ^ eta - T, one form per eta0..eta3.
std::array<Form, 4> b4se_residual(const AbstractCoframe& cf, const Pseudoconnection& pc, const Torsion& t, int epsilon);

// The pseudoconnection slots of the flat model are its own basis forms.
Pseudoconnection model_pseudoconnection(const AbstractCoframe& mc);
Torsion zero_torsion();

// ---- the chain -------------------------------------------------------------------

AdaptationState run_example_chain(const DefiningFunction& df, const ZeroTestOptions& opt = {});

// Solves the linear absorption problem for the B4 structure equations with
// tau free of eta0 (this fixes the prolongation ambiguity).
std::pair<Pseudoconnection, Torsion> solve_pseudoconnection(const AbstractCoframe& cf, int epsilon,
                                                            const Domain& domain = {},
                                                            const ZeroTestOptions& opt = {});
Pseudoconnection pseudoconnection(const AdaptationState& state);
Form solve_psi(const AdaptationState& state, const ZeroTestOptions& opt = {});
// pseudoconnection + psi, level 5
AdaptationState prolong(AdaptationState state, const ZeroTestOptions& opt = {});

// ---- curvature -------------------------------------------------------------------

struct CurvatureCoefficients {
  ScalarExpr F1, F2, T3_1b, T3_2b, F31, F32;
  // torsion families of the complete structure equations; not solved on a section
  std::optional<ScalarExpr> Q, R, S, P, O;
};

MatrixForm pulled_back_omega(const AdaptationState& state);
MatrixForm curvature_matrix(const AdaptationState& state);
// Reads the coefficients off C = d omega + omega ^ omega; throws PipelineError
// when entry (3,0) is nonzero or an entry leaves its expected span.
CurvatureCoefficients curvature_coefficients(const MatrixForm& C, const Domain& domain = {},
                                             const ZeroTestOptions& opt = {});
CurvatureCoefficients curvature_coefficients(const AdaptationState& state, const ZeroTestOptions& opt = {});

// Throws PipelineError when exactly one of F1, F2 vanishes.
bool is_flat(const CurvatureCoefficients& cc, const Domain& domain = {}, const ZeroTestOptions& opt = {});
// |F1|^2 eta0 and |F2|^2 eta0
std::pair<Form, Form> fundamental_invariants(const CurvatureCoefficients& cc, const Form& eta0);

ResidualReport verify_se_pullback(const AdaptationState& state, const CurvatureCoefficients& cc,
                                  const ZeroTestOptions& opt = {});

// Every scalar the pipeline produces: coframe entries, solved parameters,
// pseudoconnection and psi coefficients, curvature coefficients.
std::vector<std::pair<std::string, ScalarExpr>> expression_corpus(const AdaptationState& state,
                                                                  const CurvatureCoefficients& cc);

}  // namespace cartan_cr
