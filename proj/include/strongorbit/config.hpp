#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "strongorbit/continuation.hpp"
#include "strongorbit/minimizer.hpp"

namespace strongorbit {

/// Everything a run needs. Blocks other than `system` are optional in the file.
struct RunConfig {
  // system
  std::vector<double> masses;
  std::size_t dim = 2;
  double alpha = 3.0;
  double energy = 1.0;
  // discretization
  std::size_t harmonics = 32;
  std::size_t nodes = 0;         ///< quadrature nodes n_t; 0 means 8 K
  std::size_t samples = 256;     ///< trajectory samples per period
  std::size_t crosscheck_steps = 10000;
  // solver (radius lives here too)
  SolveConfig solver;
  // continuation
  std::optional<ContinuationSchedule> continuation;
  bool cold_start = false;
  // output
  std::string directory;
  std::vector<std::string> formats = {"json", "csv"};

  BodySystem system() const;
  SolveConfig solve_config() const;  ///< solver block with harmonics filled in
  std::size_t quadrature_nodes() const { return nodes ? nodes : 8 * harmonics; }

  /// ValidationError on any violated invariant of the embedded types.
  void validate() const;
  bool operator==(const RunConfig&) const;
};

/**
 * Block grammar:
 *
 *   document := entry*
 *   entry    := IDENT '=' value | IDENT '{' entry* '}'
 *   value    := NUMBER | STRING | 'true' | 'false' | '[' (value (',' value)*)? ']'
 *
 * '#' starts a comment to end of line; ';' and newlines are ignored separators.
 * Produces the equivalent JSON object.
 */
nlohmann::json parse_block_document(const std::string& text);

/// Parses either encoding (JSON when the first significant character is '{').
RunConfig parse_run_config(const std::string& text);
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);
/// Block-grammar text; numbers printed with 17 significant digits.
std::string serialize_run_config(const RunConfig& cfg);

}  // namespace strongorbit
