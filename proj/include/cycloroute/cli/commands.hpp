#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "cycloroute/cli/config.hpp"

namespace cycloroute::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int { kSuccess = 0, kRuntimeFailure = 1, kUsageError = 2 };

struct FitOptions {
  std::optional<std::size_t> rank;  // overrides config and MDL
  bool mdl = false;
};

struct EvaluateOptions {
  bool rebuild_tests = false;
};

/// Subcommands. Each throws cycloroute::Error on failure; run() maps the
/// error to an exit code.
void cmd_synth(const RunConfig& cfg, std::ostream& out);
void cmd_preprocess(const RunConfig& cfg, std::ostream& out);
void cmd_fit(const RunConfig& cfg, const FitOptions& opts, std::ostream& out);
void cmd_mdl(const RunConfig& cfg, std::ostream& out);
void cmd_spectra(const RunConfig& cfg, std::ostream& out);
/// Returns false when no predictor produced a single regret sample.
bool cmd_evaluate(const RunConfig& cfg, const EvaluateOptions& opts, std::ostream& out);
void cmd_report(const RunConfig& cfg, const std::string& partition, std::ostream& out);

/// Parses the command line (argv[0] is the program name), loads the config
/// from --config or the CYCLOROUTE_CONFIG environment variable, applies flag
/// overrides and runs the subcommand. Errors go to `err` as one line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cycloroute::cli
