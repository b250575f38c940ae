#pragma once

#include <optional>
#include <string>
#include <vector>

#include "strongorbit/minimizer.hpp"
#include "strongorbit/rescale_verify.hpp"

namespace strongorbit {

struct ContinuationSchedule {
  std::vector<double> radii;
  double d1 = 1.1;
  double d2 = 1.25;

  /// ValidationError unless radii are positive and increasing and 1 - 1/d2 > d1 - 1 > 0.
  void validate() const;
  static ContinuationSchedule geometric(double first, double ratio, std::size_t count);
};

/// inf and sup of the crossing set S.
struct CrossingTimes {
  double t_minus;
  double t_plus;
  std::size_t count;
};

/**
 * Times in (-T/2, T/2) where some body's radius |u_i(t)| equals d1 R or R / d2.
 * Sign changes between samples (including the wrap to T/2) are refined by
 * bisection on the source loop to 1e-10 T, or linearly without a source.
 * Empty optional when S is empty.
 */
std::optional<CrossingTimes> crossing_times(const Trajectory& traj, double radius, double d1, double d2);

/// u*(t) = u(t - t_star): the same states relabelled onto (-T/2 + t_star, T/2 + t_star).
Trajectory time_shift(const Trajectory& traj, double t_star);

/// Mean of the stacked speed sqrt(sum_i |u_i'|^2) over the windows 5%..15% of the
/// period in from each end.
double escape_speed(const Trajectory& traj);

struct ContinuationRecord {
  double R = 0.0;
  double T_R = 0.0;
  double t_plus = 0.0;
  double t_minus = 0.0;
  double margin_plus = 0.0;   ///< T_R/2 - t_plus
  double margin_minus = 0.0;  ///< t_minus + T_R/2
  double t_star = 0.0;
  double escape_speed = 0.0;
  double min_dist = 0.0;
  double f_value = 0.0;
  double virial_res = 0.0;
  double eom_residual = 0.0;
  double energy_residual = 0.0;
  double position_gap = 0.0;
  double energy_drift = 0.0;
  std::size_t iters = 0;
  std::string report_id;
  bool converged = false;
  bool warm_started = false;
  bool s_empty = false;
  std::string cause;  ///< empty unless the radius failed

  bool usable() const { return converged && !s_empty; }
};

struct TrendCheck {
  std::size_t from_index = 0;
  std::size_t violations_plus = 0;
  std::size_t violations_minus = 0;
  bool pass = false;
};

struct BandCheck {
  double min = 0.0;
  double max = 0.0;
  double ratio = 0.0;
  bool pass = false;
};

struct UpperBoundCheck {
  double bound = 0.0;  ///< ((alpha-2) sum_{i!=j} m_i m_j / (4H) * 1.1)^(1/alpha)
  double worst = 0.0;  ///< largest converged min_dist
  std::size_t violations = 0;
  bool pass = false;
};

struct WarmColdCheck {
  double R = 0.0;
  double f_warm = 0.0;
  double f_cold = 0.0;
  double rel_diff = 0.0;
  bool pass = false;
};

struct ClassificationReport {
  std::string label;  ///< "hyperbolic-approximant" or "withheld"
  // (a) margins trend
  bool a_pass = false;
  std::size_t a_violations = 0;
  // (b) outer radial speed against sqrt(2H / M_eff)
  bool b_pass = false;
  double b_slope = 0.0;
  double b_expected = 0.0;
  double b_rel_error = 0.0;
  double m_effective = 0.0;
  // (c) core radius bounded away from zero
  bool c_pass = false;
  double c_core_min = 0.0;
  double c_threshold = 0.0;
  double passage_center = 0.0;
  double passage_half_width = 0.0;
};

struct SweepOptions {
  std::size_t quadrature_nodes = 0;   ///< 0 means 8 K
  std::size_t samples = 256;          ///< trajectory samples per period
  std::size_t crosscheck_steps = 10000;  ///< 0 skips the integrator cross-check
  bool cold_start = false;            ///< solve every radius from initial_loop
  std::size_t threads = 1;            ///< used only with cold_start and for verification
  bool warm_cold_spot_check = true;   ///< re-solve the last warm-started radius cold
  bool throw_on_failure = true;       ///< SweepFailed when more than half the radii fail
};

struct SweepResult {
  std::vector<ContinuationRecord> records;
  std::vector<std::optional<SolveReport>> reports;
  std::vector<std::optional<Trajectory>> trajectories;  ///< shifted by t_star when defined
  TrendCheck trend;
  BandCheck band;
  UpperBoundCheck upper_bound;
  std::optional<WarmColdCheck> warm_cold;
  std::optional<ClassificationReport> classification;
  std::size_t failures = 0;
};

/// Decreases between consecutive entries of values[from..].
std::size_t trend_violations(const std::vector<double>& values, std::size_t from);

TrendCheck margins_trend(const std::vector<ContinuationRecord>& records, std::size_t from_index,
                         std::size_t allowed_violations = 1);
BandCheck min_dist_band(const std::vector<ContinuationRecord>& records, double max_ratio = 1e3);
/// ((alpha-2) sum_{i!=j} m_i m_j / (4H) * 1.1)^(1/alpha).
double min_dist_upper_bound(const BodySystem& sys);
UpperBoundCheck min_dist_upper_check(const std::vector<ContinuationRecord>& records, const BodySystem& sys);

/**
 * Solves each radius (warm-started from the previous path scaled by the radius
 * ratio, falling back to a cold start), rescales, verifies, and records crossing
 * diagnostics with t* the midpoint of t- and t+. SweepFailed if more than half
 * of the radii fail.
 */
SweepResult run_sweep(const BodySystem& sys, const ContinuationSchedule& sched, const SolveConfig& cfg,
                      const SweepOptions& opts = {});

/**
 * Classification of the final trajectory. The passage is the sample window centred
 * on the global minimum of |u| and bounded by the nearest maxima of |u|; the radial
 * speed is the slope of |u| against |t - t_c| over the outer part of that window.
 */
ClassificationReport classify_hyperbolic(const std::vector<ContinuationRecord>& records,
                                         const Trajectory& traj_final);

}  // namespace strongorbit
