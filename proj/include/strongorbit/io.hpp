#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "strongorbit/continuation.hpp"
#include "strongorbit/minimizer.hpp"
#include "strongorbit/rescale_verify.hpp"

namespace strongorbit {

inline constexpr int kSchemaVersion = 1;

nlohmann::json to_json(const BodySystem& sys);
BodySystem system_from_json(const nlohmann::json& j);

/// {"n_bodies", "dim", "harmonics", "basis", "bodies": [[{"k", "cos", "sin"}...]...]}
nlohmann::json to_json(const LoopPath& path);
LoopPath loop_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SolveConfig& cfg);
SolveConfig solve_config_from_json(const nlohmann::json& j, SolveConfig base = {});

/// Report fields without the loop coefficients (those go to loop.json).
nlohmann::json to_json(const SolveReport& report);
nlohmann::json to_json(const ContinuationSchedule& sched);
nlohmann::json to_json(const ContinuationRecord& rec);
nlohmann::json to_json(const ClassificationReport& c);
nlohmann::json to_json(const CrosscheckReport& c);

/// {"records", "checks", "classification"} for a finished sweep.
nlohmann::json sweep_body_json(const SweepResult& res);

/// Header t,body,x1..xd,v1..vd; one row per (time, body), time-major; %.17g numbers.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
/**
 * Reads the CSV layout above into a source-less trajectory for `sys`.
 * ValidationError on a malformed file: missing header, wrong column count,
 * body indices out of order, rows not a multiple of N, or non-increasing times.
 * The period is inferred as n * (mean sample spacing).
 */
Trajectory read_trajectory_csv(std::istream& in, const BodySystem& sys);

/// Writes text to a file, creating parent directories.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace strongorbit
