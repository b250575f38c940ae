#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "strongorbit/action.hpp"
#include "strongorbit/errors.hpp"
#include "strongorbit/loop_space.hpp"
#include "strongorbit/model.hpp"

namespace strongorbit {

/// Endpoint-weight schedule {10, 1e2, 1e3, 1e4, 1e6} * H.
std::vector<double> default_penalty_schedule(double energy);

struct SolveConfig {
  double radius = 1.0;                ///< R, the prescribed |q_i(0)|
  std::size_t harmonics = 32;         ///< K
  std::vector<double> penalty_schedule;  ///< absolute weights mu; empty means default_penalty_schedule(H)
  double grad_tol = 0.0;              ///< 0 means 1e-8 * max(1, f at start)
  std::size_t max_iters = 50000;      ///< descent iterations summed over all stages
  double ls_backtrack = 0.5;
  std::size_t ls_max_steps = 60;
  double armijo = 1e-4;
  std::size_t history_pairs = 10;
  double min_dist_guard = 1e-6;
  std::uint64_t seed = 0;
  double perturbation = 1e-3;         ///< seeded higher-harmonic noise, relative to R
  std::size_t retries = 3;            ///< extra seeds tried by minimize() after a failure
  std::size_t extra_stages = 30;      ///< multiplier updates allowed at the final weight
  bool record_history = false;

  /// Throws ValidationError when an invariant fails for this system.
  void validate(const BodySystem& sys) const;
  std::vector<double> schedule_for(const BodySystem& sys) const;
};

struct IterateRecord {
  std::size_t stage;
  std::size_t iter;
  double objective;  ///< f plus endpoint terms
  double f;
  double kinetic;
};

struct SolveReport {
  LoopPath path;  ///< the minimizer q_R
  double radius = 0.0;
  double f_value = 0.0;
  double f_start = 0.0;
  double kinetic = 0.0;
  double mean_excess = 0.0;
  double projected_grad_norm = 0.0;  ///< |grad f| with the endpoint normals projected out
  double grad_tol = 0.0;
  double endpoint_res = 0.0;
  double virial_res = 0.0;           ///< |int (2H + (alpha-2) V) dt|
  double min_dist = 0.0;
  double min_dist_guard = 0.0;
  std::vector<double> multipliers;   ///< endpoint multiplier estimates, one per body
  std::size_t iters = 0;
  std::size_t stages = 0;
  std::uint64_t seed = 0;
  bool converged = false;
  std::string message;
  std::vector<IterateRecord> history;
};

/// Iteration budget exhausted (or descent stalled) before the convergence test passed.
class NonConvergence : public Error {
 public:
  explicit NonConvergence(SolveReport best);
  const SolveReport& best() const { return best_; }

 private:
  SolveReport best_;
};

/**
 * Circular comparison loop Q_i(t) = R [e1 cos 2pi(t + i/N) + e2 sin 2pi(t + i/N)],
 * i = 1..N, in the k = 1 slot, plus uniform noise of size perturbation * R on the
 * higher slots drawn from a generator seeded with `seed`.
 */
LoopPath initial_loop(const BodySystem& sys, double radius, std::size_t harmonics, std::uint64_t seed,
                      double perturbation = 1e-3);

/// Minimize from initial_loop(seed), retrying with derived seeds on failure.
SolveReport minimize(const BodySystem& sys, const SolveConfig& cfg, const QuadratureGrid& grid);

/// Single descent run from a given start (warm start). Throws NonConvergence.
SolveReport minimize_from(const BodySystem& sys, const SolveConfig& cfg, const QuadratureGrid& grid,
                          const LoopPath& start);

/// Gradient of f with the directions normal to |q_i(0)| = R removed.
std::vector<double> projected_gradient(const LoopPath& path, std::span<const double> grad);

/**
 * Re-embeds the minimizer in the full period-1 basis, evaluates the unconstrained
 * gradient of f there, removes the endpoint-constraint normals together with
 * their images under q(t) -> -q(t + 1/2), and returns the remaining norm.
 */
double symmetric_criticality_check(const SolveReport& report, const BodySystem& sys,
                                   const QuadratureGrid& grid);
/// Same check for an arbitrary odd-basis loop.
double symmetric_criticality_residual(const LoopPath& path, const BodySystem& sys,
                                      const QuadratureGrid& grid);

/**
 * Radius R at which the regular N-gon relative equilibrium (equal masses) has
 * energy H: R = ((alpha/2 - 1) |V_1| / H)^(1/alpha), V_1 the potential of the
 * unit-radius polygon. Empty for unequal masses.
 */
std::optional<double> matched_ring_radius(const BodySystem& sys);

/// Seed used by attempt number `attempt` (attempt 0 is the configured seed).
std::uint64_t derived_seed(std::uint64_t seed, std::size_t attempt);

}  // namespace strongorbit
