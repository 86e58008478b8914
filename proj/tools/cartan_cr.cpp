// cartan-cr: batch front end over the library.
#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "cartan_cr/cli.hpp"

using namespace cartan_cr::cli;

int main(int argc, char** argv) {
  CLI::App app{"Cartan equivalence toolkit for 7-dimensional 2-nondegenerate CR hypersurfaces"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--epsilon", cfg.epsilon, "signature sign, 1 or -1")->check(CLI::IsMember({1, -1}));
    sub->add_option("--samples", cfg.samples, "sample points for zero tests");
    sub->add_option("--tol", cfg.tol, "absolute tolerance for sampled zero tests");
    sub->add_option("--seed", cfg.seed, "sampling seed (CARTAN_CR_SEED overrides)");
    sub->add_option("--format", cfg.format, "json or text")->check(CLI::IsMember({"json", "text"}));
    sub->add_option("--output", cfg.output, "write the report here instead of stdout");
  };
  auto* mc = app.add_subcommand("verify-mc", "check the Maurer-Cartan equations of the flat model");
  common(mc);
  mc->add_flag("--corrupt", cfg.corrupt, "flip one sign in the structure table (debug)");
  auto* an = app.add_subcommand("analyze", "Levi form, cubic form and isotropy class of a tube");
  common(an);
  an->add_option("--f", cfg.f, "defining function f(x1, x2, x3)");
  auto* ex = app.add_subcommand("check-example", "run the adaptation chain and compare with the closed forms");
  common(ex);
  ex->add_option("--f", cfg.f, "defining function f(x1, x2, x3)");
  auto* eq = app.add_subcommand("equivariance", "equivariance of omega under the prolongation group");
  common(eq);
  eq->add_flag("--mutate", cfg.mutate, "use Ad with the inverse element (debug)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kSuccess : kUsageError;
  }
  for (auto* s : {mc, an, ex, eq})
    if (s->parsed()) cfg.command = s->get_name();

  if (const char* env = std::getenv("CARTAN_CR_SEED")) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "CARTAN_CR_SEED is not an unsigned integer\n";
      return kUsageError;
    }
  }

  CommandResult res = run_command(cfg);
  std::string out = render(res.report, cfg.format == "text" ? "text" : "json");
  if (cfg.output.empty()) {
    std::cout << out;
  } else {
    std::ofstream f(cfg.output);
    if (!f) {
      std::cerr << "cannot write " << cfg.output << "\n";
      return kUsageError;
    }
    f << out;
  }
  if (res.exit_code != kSuccess && res.report.contains("error"))
    std::cerr << res.report["error"]["message"].get<std::string>() << "\n";
  return res.exit_code;
}
