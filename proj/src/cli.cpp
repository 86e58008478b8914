#include "cartan_cr/cli.hpp"

#include <cfloat>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cartan_cr/pipeline.hpp"
#include "cartan_cr/serialize.hpp"

namespace cartan_cr::cli {

using nlohmann::json;

namespace {

ZeroTestOptions zero_options(const RunConfig& cfg) { return {cfg.samples, cfg.tol, cfg.seed}; }

json base_report(const RunConfig& cfg) {
  json cfgj = {{"epsilon", cfg.epsilon}, {"samples", cfg.samples}, {"tol", cfg.tol}, {"seed", cfg.seed}};
  if (cfg.command == "analyze" || cfg.command == "check-example") cfgj["f"] = cfg.f;
  if (cfg.corrupt) cfgj["corrupt"] = true;
  if (cfg.mutate) cfgj["mutate"] = true;
  return {{"schema", kReportSchema},
          {"schema_version", kReportSchemaVersion},
          {"command", cfg.command},
          {"config", cfgj},
          {"checks", json::array()},
          {"results", json::object()}};
}

void add_check(json& r, const std::string& name, bool ok, std::optional<double> max_residual = std::nullopt,
               const std::string& detail = "") {
  json c = {{"name", name}, {"ok", ok}};
  if (max_residual) c["max_residual"] = *max_residual;
  if (!detail.empty()) c["detail"] = detail;
  r["checks"].push_back(c);
}

CommandResult finish(json r) {
  bool ok = true;
  for (const auto& c : r["checks"]) ok = ok && c["ok"].get<bool>();
  int code = ok ? kSuccess : kVerificationFailure;
  r["status"] = ok ? "pass" : "fail";
  r["exit_code"] = code;
  return {code, r};
}

json complex_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

bool form_exactly_zero(const Form& f) {
  for (const auto& [m, c] : f.terms())
    if (!c.is_zero_literal()) return false;
  return true;
}

// Sampled evaluation cannot resolve differences below a few ulps of the
// values being compared.
double rounding_floor(const std::vector<ScalarExpr>& values, const Domain& dom, const ZeroTestOptions& opt) {
  double scale = 1.0;
  for (const auto& v : values) scale = std::max(scale, max_abs(v, dom, opt));
  return 4.0 * DBL_EPSILON * scale;
}

// closed forms for the default example
struct GoldenEntry {
  const char* name;
  const char* value;
};
const GoldenEntry kGoldenCurvature[] = {
    {"F1", "-(1-i)/(4*sqrt(x3))"},      {"F2", "-(1+i)/(4*sqrt(x3))"}, {"T3_1b", "-(1-i)/(64*x3^(3/2))"},
    {"T3_2b", "(1+i)/(64*x3^(3/2))"}, {"F31", "i/(8*x3)"},           {"F32", "-i/(8*x3)"}};
const GoldenEntry kGoldenSolved[] = {
    {"b3", "1/x3"}, {"c1", "(-1+i)/(4*sqrt(x3))"}, {"c2", "(1+i)/(4*sqrt(x3))"}, {"c3", "-i/(16*x3)"}};
const GoldenEntry kGoldenPsi[] = {{"eta0", "1/(128*x3^2)"},
                                  {"eta1", "(1+i)/(128*x3^(3/2))"},
                                  {"eta1b", "(1-i)/(128*x3^(3/2))"},
                                  {"eta2", "-(1-i)/(128*x3^(3/2))"},
                                  {"eta2b", "-(1+i)/(128*x3^(3/2))"}};

ScalarExpr curvature_field(const CurvatureCoefficients& cc, const std::string& n) {
  if (n == "F1") return cc.F1;
  if (n == "F2") return cc.F2;
  if (n == "T3_1b") return cc.T3_1b;
  if (n == "T3_2b") return cc.T3_2b;
  if (n == "F31") return cc.F31;
  return cc.F32;
}

void add_report_checks(json& r, const std::string& prefix, const ResidualReport& rep) {
  std::map<std::string, std::pair<bool, double>> by_eq;
  std::map<std::string, std::string> first_bad;
  for (const auto& e : rep.entries) {
    auto& [ok, mx] = by_eq.try_emplace(e.equation, true, 0.0).first->second;
    ok = ok && e.ok;
    mx = std::max(mx, e.max_abs);
    if (!e.ok && !first_bad.count(e.equation)) first_bad[e.equation] = e.monomial;
  }
  for (const auto& [eq, v] : by_eq)
    add_check(r, prefix + eq, v.first, v.second, first_bad.count(eq) ? "fails at " + first_bad[eq] : "");
}

}  // namespace

void validate(const RunConfig& cfg) {
  if (cfg.epsilon != 1 && cfg.epsilon != -1) throw std::invalid_argument("--epsilon must be 1 or -1");
  if (!(cfg.tol > 0) || !std::isfinite(cfg.tol)) throw std::invalid_argument("--tol must be positive");
  if (cfg.samples < 1) throw std::invalid_argument("--samples must be at least 1");
  if (cfg.format != "json" && cfg.format != "text") throw std::invalid_argument("--format must be json or text");
}

CommandResult cmd_verify_mc(const RunConfig& cfg) {
  json r = base_report(cfg);
  MaurerCartanReport mc = verify_maurer_cartan(cfg.epsilon, cfg.corrupt);
  json forms = json::object();
  bool d2 = true;
  for (const auto& [s, f] : mc.d_squared) {
    bool z = form_exactly_zero(f);
    d2 = d2 && z;
    if (!z) forms["d^2 " + s] = to_json(f);
  }
  add_check(r, "d^2 = 0", d2, std::nullopt, "exact, " + std::to_string(mc.d_squared.size()) + " generators");
  bool flat = true;
  std::size_t nonzero = 0;
  for (std::size_t a = 0; a < mc.mc_residual.dim(); ++a)
    for (std::size_t b = 0; b < mc.mc_residual.dim(); ++b)
      if (!form_exactly_zero(mc.mc_residual(a, b))) {
        flat = false;
        ++nonzero;
      }
  add_check(r, "d omega + omega ^ omega = 0", flat, std::nullopt, "exact");
  if (!flat) forms["d omega + omega ^ omega"] = to_json(mc.mc_residual);
  r["results"] = {{"epsilon", cfg.epsilon},
                  {"group", cfg.epsilon == 1 ? "su(2,2)" : "su(3,1)"},
                  {"nonzero_entries", nonzero}};
  r["forms"] = forms;
  return finish(r);
}

CommandResult cmd_analyze(const RunConfig& cfg) {
  json r = base_report(cfg);
  auto opt = zero_options(cfg);
  DefiningFunction df = DefiningFunction::parse(cfg.f);
  EMatrix L = levi_matrix(df);
  ScalarExpr det = L.determinant();
  bool degenerate = is_zero(det, df.domain, opt);
  json lm = json::array();
  for (std::size_t a = 0; a < 3; ++a) {
    json row = json::array();
    for (std::size_t b = 0; b < 3; ++b) row.push_back(to_string(L(a, b)));
    lm.push_back(row);
  }
  json res = {{"degenerate", degenerate},
              {"levi_rank", levi_rank(df, opt)},
              {"levi_matrix", lm},
              {"levi_determinant", to_string(det)}};
  json exprs = json::object();
  exprs["f"] = to_string(df.f);
  exprs["det"] = to_string(det);

  // cubic form of the 1-adapted frame
  try {
    if (!degenerate) throw PreconditionError("degenerate", "the Levi form is nondegenerate");
    TubeCoframe c = diagonalizing_coframe(df, natural_signs(df));
    SymbolicCubic sc = symbolic_cubic(c, df.domain, opt);
    Point ref{{"x1", 1.0}, {"x2", 1.0}, {"x3", 1.0}};
    CubicData cd = sc.at(ref);
    IsotropyClass cls = isotropy_class(cd, cfg.tol);
    json cub = {{"epsilon", sc.epsilon},
                {"U1", to_string(sc.U1)},
                {"U", to_string(sc.U)},
                {"U2", to_string(sc.U2)},
                {"antidiagonal", is_zero(sc.U1, df.domain, opt) && is_zero(sc.U2, df.domain, opt)},
                {"conformal_unitary", sc.lambda.has_value()},
                {"reference_point", ref},
                {"at_reference", {{"U1", complex_json(cd.U1)}, {"U", complex_json(cd.U)}, {"U2", complex_json(cd.U2)}}},
                {"class", to_string(cls)}};
    exprs["U1"] = to_string(sc.U1);
    exprs["U"] = to_string(sc.U);
    exprs["U2"] = to_string(sc.U2);
    if (sc.lambda) {
      cub["lambda"] = to_string(*sc.lambda);
      exprs["lambda"] = to_string(*sc.lambda);
    }
    try {
      CubicData n = transport(cd, normalize_cubic(cd, cfg.tol));
      cub["normalized"] = {{"U1", complex_json(n.U1)}, {"U", complex_json(n.U)}, {"U2", complex_json(n.U2)}};
      cub["normalized_antidiagonal"] = std::abs(n.U1) < cfg.tol && std::abs(n.U2) < cfg.tol;
    } catch (const std::exception& e) {
      cub["normalized"] = nullptr;
      cub["normalize_error"] = e.what();
    }
    res["cubic"] = cub;
    res["class"] = to_string(cls);
  } catch (const CrError& e) {
    res["cubic"] = nullptr;
    res["cubic_unavailable"] = e.what();
  }
  res["expressions"] = exprs;
  r["results"] = res;
  add_check(r, "analysis", true);
  return finish(r);
}

CommandResult cmd_check_example(const RunConfig& cfg) {
  json r = base_report(cfg);
  auto opt = zero_options(cfg);
  DefiningFunction df = DefiningFunction::parse(cfg.f);
  const Domain& dom = df.domain;
  const auto& X = tube_coordinates();
  bool is_default = df.f == parse(kDefaultExample, X);

  AdaptationState st = prolong(run_example_chain(df, opt), opt);
  CurvatureCoefficients cc = curvature_coefficients(st, opt);

  add_report_checks(r, "4-adapted ", verify_adapted(st, 4, opt));
  add_report_checks(r, "pullback ", verify_se_pullback(st, cc, opt));

  std::vector<ScalarExpr> compared;
  if (is_default) {
    auto golden = [&](const std::string& name, const ScalarExpr& got, const char* want) {
      ScalarExpr w = parse(want, X);
      compared.push_back(w);
      double m = max_abs(got - w, dom, opt);
      add_check(r, "golden " + name, is_zero(got - w, dom, opt), m, std::string("expected ") + want);
    };
    for (const auto& g : kGoldenCurvature) golden(g.name, curvature_field(cc, g.name), g.value);
    std::map<std::string, ScalarExpr> solved;
    for (const auto& s : st.applied) solved.insert(s.solved.begin(), s.solved.end());
    for (const auto& g : kGoldenSolved) golden(g.name, solved.count(g.name) ? solved.at(g.name) : ScalarExpr(0), g.value);
    for (const auto& g : kGoldenPsi) golden(std::string("psi[") + g.name + "]", coefficient_of(*st.psi, {g.name}), g.value);
    bool flat = is_flat(cc, dom, opt);
    add_check(r, "not flat", !flat);
    ScalarExpr inv = parse("1/(8*x3)", X);
    add_check(r, "|F1|^2 = 1/(8 x3)", is_zero(cc.F1 * conj(cc.F1) - inv, dom, opt));
    add_check(r, "|F2|^2 = 1/(8 x3)", is_zero(cc.F2 * conj(cc.F2) - inv, dom, opt));
  } else {
    for (const auto& g : kGoldenCurvature) compared.push_back(curvature_field(cc, g.name));
  }
  double floor = rounding_floor(compared, dom, opt);
  {
    std::ostringstream os;
    os << "rounding floor " << floor;
    add_check(r, "tolerance resolvable", cfg.tol >= floor, std::nullopt, os.str());
  }

  json curv = json::object();
  for (const auto& g : kGoldenCurvature) curv[g.name] = to_string(curvature_field(cc, g.name));
  json solved = json::object();
  for (const auto& s : st.applied)
    for (const auto& [n, e] : s.solved) solved[n] = to_string(e);
  json exprs = json::object();
  for (const auto& [n, e] : expression_corpus(st, cc)) exprs[n] = to_string(e);
  const TubeCoframe& c = *st.coframe;
  const Pseudoconnection& pc = *st.pseudoconnection;
  json forms = json::object();
  for (int k = 0; k < 4; ++k) {
    forms["eta" + std::to_string(k) + " (chart)"] = to_json(c.on_chart(k));
    forms["d eta" + std::to_string(k)] = to_json(c.structure(k));
  }
  forms["tau"] = to_json(pc.tau);
  forms["rho"] = to_json(pc.rho);
  forms["sigma"] = to_json(pc.sigma);
  forms["gamma1"] = to_json(pc.gamma1);
  forms["gamma2"] = to_json(pc.gamma2);
  forms["psi"] = to_json(*st.psi);
  r["results"] = {{"golden_reference", is_default},
                  {"flat", is_flat(cc, dom, opt)},
                  {"curvature", curv},
                  {"solved", solved},
                  {"stages", json::array()},
                  {"expressions", exprs}};
  for (const auto& s : st.applied) r["results"]["stages"].push_back(s.name);
  r["forms"] = forms;
  return finish(r);
}

CommandResult cmd_equivariance(const RunConfig& cfg) {
  json r = base_report(cfg);
  ScalarExpr y = ScalarExpr::coordinate("y");
  MatrixForm res = equivariance_residual(cfg.epsilon, y, cfg.mutate);
  bool sym = true;
  for (std::size_t a = 0; a < res.dim(); ++a)
    for (std::size_t b = 0; b < res.dim(); ++b) sym = sym && form_exactly_zero(res(a, b));
  add_check(r, "symbolic y", sym, std::nullopt, "exact");
  for (const char* v : {"-1", "1/2", "3"}) {
    ScalarExpr yv = parse(v, {});
    double m = 0;
    for (std::size_t a = 0; a < res.dim(); ++a)
      for (std::size_t b = 0; b < res.dim(); ++b)
        for (const auto& [mono, coef] : res(a, b).terms()) m = std::max(m, std::abs(eval(substitute(coef, {{"y", yv}}), {})));
    bool direct = equivariance_residual(cfg.epsilon, yv, cfg.mutate).is_zero();
    add_check(r, std::string("y = ") + v, m <= cfg.tol && direct, m);
  }
  r["results"] = {{"epsilon", cfg.epsilon}, {"mutated", cfg.mutate}};
  if (!sym) r["forms"] = {{"residual", to_json(res)}};
  return finish(r);
}

CommandResult run_command(const RunConfig& cfg) {
  auto error = [&](int code, const std::string& kind, const std::string& msg) {
    json r = base_report(cfg);
    r["status"] = "error";
    r["exit_code"] = code;
    r["error"] = {{"kind", kind}, {"message", msg}};
    return CommandResult{code, r};
  };
  try {
    validate(cfg);
    if (cfg.command == "verify-mc") return cmd_verify_mc(cfg);
    if (cfg.command == "analyze") return cmd_analyze(cfg);
    if (cfg.command == "check-example") return cmd_check_example(cfg);
    if (cfg.command == "equivariance") return cmd_equivariance(cfg);
    return error(kUsageError, "usage", "unknown command '" + cfg.command + "'");
  } catch (const std::invalid_argument& e) {
    return error(kUsageError, "usage", e.what());
  } catch (const ParseError& e) {
    return error(kUsageError, "parse", e.what());
  } catch (const DomainError& e) {
    return error(kUsageError, "domain", e.what());
  } catch (const SamplerError& e) {
    return error(kUsageError, "domain", e.what());
  } catch (const PreconditionError& e) {
    return error(kUsageError, "precondition", e.what());
  } catch (const PipelineError& e) {
    return error(kVerificationFailure, "pipeline", e.what());
  } catch (const std::exception& e) {
    return error(kVerificationFailure, "internal", e.what());
  }
}

std::string render(const json& report, const std::string& format) {
  if (format == "json") return report.dump(2) + "\n";
  std::ostringstream os;
  os << report.value("command", "") << ": " << report.value("status", "") << " (exit " << report.value("exit_code", 0)
     << ")\n";
  if (report.contains("error")) os << "  error: " << report["error"]["message"].get<std::string>() << "\n";
  for (const auto& c : report["checks"]) {
    os << "  [" << (c["ok"].get<bool>() ? "ok" : "FAIL") << "] " << c["name"].get<std::string>();
    if (c.contains("max_residual")) os << "  max residual " << c["max_residual"].get<double>();
    if (c.contains("detail")) os << "  (" << c["detail"].get<std::string>() << ")";
    os << "\n";
  }
  const json& res = report["results"];
  for (const char* key : {"degenerate", "levi_rank", "class", "flat", "group"})
    if (res.contains(key)) os << "  " << key << ": " << res[key].dump() << "\n";
  if (res.contains("curvature"))
    for (const auto& [k, v] : res["curvature"].items()) os << "  " << k << " = " << v.get<std::string>() << "\n";
  return os.str();
}

std::vector<std::string> report_expressions(const json& report) {
  std::vector<std::string> out;
  auto walk_form = [&](const json& f) {
    for (const auto& t : f["terms"]) out.push_back(t["coeff"].get<std::string>());
  };
  if (report.contains("forms"))
    for (const auto& [k, f] : report["forms"].items()) {
      if (f.contains("entries")) {
        for (const auto& row : f["entries"])
          for (const auto& e : row) walk_form(e);
      } else {
        walk_form(f);
      }
    }
  if (report.contains("results") && report["results"].contains("expressions"))
    for (const auto& [k, v] : report["results"]["expressions"].items()) out.push_back(v.get<std::string>());
  return out;
}

}  // namespace cartan_cr::cli
