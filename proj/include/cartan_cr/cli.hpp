#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace cartan_cr::cli {

inline constexpr const char* kReportSchema = "cartan-cr-report";
inline constexpr const char* kReportSchemaVersion = "1.0";
inline constexpr const char* kDefaultExample = "-x3*ln(x1*x2/x3^2)";

enum ExitCode : int { kSuccess = 0, kVerificationFailure = 1, kUsageError = 2 };

struct RunConfig {
  std::string command;
  int epsilon = 1;
  std::string f = kDefaultExample;
  int samples = 100;
  double tol = 1e-9;
  std::uint64_t seed = 0;
  std::string output;  // empty: stdout
  std::string format = "json";
  bool corrupt = false;  // verify-mc: flip one table sign
  bool mutate = false;   // equivariance: Ad with the inverse
};

struct CommandResult {
  int exit_code = kSuccess;
  nlohmann::json report;
};

// Throws std::invalid_argument on a config that breaks the RunConfig invariants.
void validate(const RunConfig& cfg);

CommandResult cmd_verify_mc(const RunConfig& cfg);
CommandResult cmd_analyze(const RunConfig& cfg);
CommandResult cmd_check_example(const RunConfig& cfg);
CommandResult cmd_equivariance(const RunConfig& cfg);

// Validates, dispatches on cfg.command and maps library errors to exit codes.
CommandResult run_command(const RunConfig& cfg);

std::string render(const nlohmann::json& report, const std::string& format);

// Every expression string in a report: form coefficients and the
// results.expressions map.
std::vector<std::string> report_expressions(const nlohmann::json& report);

}  // namespace cartan_cr::cli
