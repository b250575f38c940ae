#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "strongorbit/config.hpp"

namespace strongorbit {

enum ExitCode : int { kExitOk = 0, kExitNumerical = 2, kExitInput = 3 };

struct CommandOptions {
  std::string config_path;
  std::string out_dir;  ///< empty means runs/<timestamp>
  std::size_t threads = 1;
  bool quiet = false;
  // verify only
  std::string trajectory_path;
  double eom_tol = 1e-3;      ///< finite-difference EOM residual threshold
  double energy_tol = 1e-6;   ///< relative to H
  double closure_tol = 1e-3;  ///< relative to the largest body radius
  std::size_t verify_steps = 10000;
};

/// UTC timestamp like 20260102T030405Z.
std::string utc_timestamp();

/// Diagnostics for one solved loop: period, residuals, cross-check, criticality.
nlohmann::json solve_diagnostics(const BodySystem& sys, const RunConfig& cfg, const SolveReport& report);

int cmd_solve(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_verify(const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Full command line: `strongorbit <solve|sweep|verify> [flags]`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace strongorbit
