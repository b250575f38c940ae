#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "strongorbit/loop_space.hpp"
#include "strongorbit/model.hpp"

namespace strongorbit {

/**
 * A T-periodic solution sampled at uniform physical times.
 *
 * Sample m sits at physical time base_times[m] + shift. Shifting a trajectory
 * only relabels time, so the stored states never change under time_shift.
 * When the trajectory came from a loop, `source` holds it and sample m is the
 * loop evaluated at loop time m / n.
 */
struct Trajectory {
  BodySystem sys;
  double period = 0.0;
  double shift = 0.0;
  std::vector<double> base_times;
  std::vector<Configuration> positions;
  std::vector<Configuration> velocities;
  std::optional<LoopPath> source;

  std::size_t size() const { return base_times.size(); }
  double time(std::size_t m) const { return base_times[m] + shift; }
  std::vector<double> times() const;
};

/// T = sqrt((kinetic / 2) / mean_excess). DegenerateLoop if kinetic is 0.
double period_from_integrals(double kinetic, double mean_excess);
/// T_R for a loop: kinetic = ||q||^2, mean_excess = int (H - V(q)) dt.
double period_from_path(const LoopPath& path, const QuadratureGrid& grid, const BodySystem& sys);

/**
 * u(t) = q((t + T/2) / T) sampled at t_m = -T/2 + m T / n, m = 0..n-1, with
 * velocities q'(.) / T.
 */
Trajectory rescale(const LoopPath& path, double period, const BodySystem& sys, std::size_t n_samples);

/// Loop q(s) = u(s T - T/2) rebuilt from the samples by discrete projection onto
/// the first `harmonics` odd frequencies (needs n > 2 (2K - 1)).
LoopPath to_loop(const Trajectory& traj, std::size_t harmonics);

/**
 * max over samples and bodies of |m_i u_i'' + grad_i V(u)| / (m_i * a_max), a_max the
 * largest acceleration magnitude. Accelerations come from the source loop termwise;
 * without a source, central differences of the sampled velocities on interior samples.
 */
double eom_residual(const Trajectory& traj);

struct EnergyResiduals {
  double loop_form;      ///< max |(1/(2T^2)) sum m_i |q_i'|^2 + V(q) - H| / H, from the source loop
  double physical_form;  ///< max |(1/2) sum m_i |u_i'|^2 + V(u) - H| / H, from stored samples
};
EnergyResiduals energy_residuals(const Trajectory& traj);

/// Energy (1/2) sum m_i |v_i|^2 + V(x).
double total_energy(const BodySystem& sys, const Configuration& x, const Configuration& v);

struct CrosscheckReport {
  double max_position_gap = 0.0;  ///< max over steps and bodies of |x_i - u_i|
  double energy_drift = 0.0;      ///< max over steps of |E - E_0| / |E_0|
  double closure_gap = 0.0;       ///< max over bodies of |x_i(T) - x_i(0)|
  std::size_t steps = 0;
};

/**
 * Kick-drift-kick leapfrog from the state at t = -T/2 over one period with fixed
 * step T / steps_per_period. The comparison uses the source loop at every step,
 * or the stored samples at the steps that land on them. IntegratorBlowup when a
 * pairwise distance drops below distance_floor (default: the system floor).
 */
CrosscheckReport symplectic_crosscheck(const Trajectory& traj, std::size_t steps_per_period,
                                       double distance_floor = 0.0);

}  // namespace strongorbit
