#include "strongorbit/rescale_verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "strongorbit/action.hpp"
#include "strongorbit/errors.hpp"

namespace strongorbit {

namespace {

double body_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double kinetic_energy(const BodySystem& sys, const Configuration& v) {
  double t = 0.0;
  for (std::size_t i = 0; i < sys.n_bodies(); ++i) {
    const double s = body_norm(v.body(i));
    t += 0.5 * sys.mass(i) * s * s;
  }
  return t;
}

// m_i u_i'' + grad_i V(u) measured against a_max.
double eom_mismatch(const BodySystem& sys, const Configuration& x, const Configuration& acc, double a_max) {
  const Configuration g = potential_gradient(sys, x);
  double worst = 0.0;
  for (std::size_t i = 0; i < sys.n_bodies(); ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < sys.dim(); ++c) {
      const double r = sys.mass(i) * acc(i, c) + g(i, c);
      s += r * r;
    }
    worst = std::max(worst, std::sqrt(s) / (sys.mass(i) * a_max));
  }
  return worst;
}

double max_body_norm(const Configuration& c) {
  double m = 0.0;
  for (std::size_t i = 0; i < c.n_bodies(); ++i) m = std::max(m, body_norm(c.body(i)));
  return m;
}

double max_body_gap(const Configuration& a, const Configuration& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.n_bodies(); ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.dim(); ++c) {
      const double d = a(i, c) - b(i, c);
      s += d * d;
    }
    m = std::max(m, std::sqrt(s));
  }
  return m;
}

Configuration accelerations_of(const BodySystem& sys, const Configuration& x) {
  Configuration a = potential_gradient(sys, x);
  for (std::size_t i = 0; i < sys.n_bodies(); ++i)
    for (std::size_t c = 0; c < sys.dim(); ++c) a(i, c) = -a(i, c) / sys.mass(i);
  return a;
}

}  // namespace

std::vector<double> Trajectory::times() const {
  std::vector<double> t(base_times.size());
  for (std::size_t m = 0; m < t.size(); ++m) t[m] = time(m);
  return t;
}

double period_from_integrals(double kinetic, double mean_excess) {
  if (!(kinetic > 0.0)) throw DegenerateLoop("loop has zero kinetic content; no period");
  if (!(mean_excess > 0.0)) throw DomainError("int (H - V) dt must be positive");
  return std::sqrt(0.5 * kinetic / mean_excess);
}

double period_from_path(const LoopPath& path, const QuadratureGrid& grid, const BodySystem& sys) {
  const double kinetic = norm_squared(path, sys);
  if (!(kinetic > 0.0)) throw DegenerateLoop("loop has zero kinetic content; no period");
  const ActionValue v = LoopFunctional(sys, grid, path).value(path);
  return period_from_integrals(kinetic, v.mean_excess);
}

Trajectory rescale(const LoopPath& path, double period, const BodySystem& sys, std::size_t n_samples) {
  if (!(period > 0.0)) throw DomainError("rescale needs T > 0");
  const QuadratureGrid grid(n_samples);
  const NodeBasis basis(path, grid);
  Trajectory traj{sys, period, 0.0, {}, sample_positions(path, basis), sample_velocities(path, basis), path};
  traj.base_times.resize(n_samples);
  for (std::size_t m = 0; m < n_samples; ++m) {
    traj.base_times[m] = (grid.node(m) - 0.5) * period;
    traj.velocities[m] *= 1.0 / period;
  }
  return traj;
}

LoopPath to_loop(const Trajectory& traj, std::size_t harmonics) {
  const std::size_t n = traj.size();
  if (harmonics < 1 || n <= 2 * (2 * harmonics - 1))
    throw DomainError("to_loop: too few samples for the requested harmonics");
  const std::size_t nb = traj.sys.n_bodies();
  const std::size_t d = traj.sys.dim();
  LoopPath p(nb, d, harmonics, Basis::odd);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t h = 0; h < harmonics; ++h) {
    const std::size_t k = 2 * h + 1;
    for (std::size_t m = 0; m < n; ++m) {
      const double angle = two_pi * static_cast<double>((k * m) % n) / static_cast<double>(n);
      const double cw = std::cos(angle) * 2.0 / static_cast<double>(n);
      const double sw = std::sin(angle) * 2.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < nb; ++i)
        for (std::size_t c = 0; c < d; ++c) {
          p.cos_coeff(i, h, c) += cw * traj.positions[m](i, c);
          p.sin_coeff(i, h, c) += sw * traj.positions[m](i, c);
        }
    }
  }
  return p;
}

double eom_residual(const Trajectory& traj) {
  const std::size_t n = traj.size();
  const BodySystem& sys = traj.sys;
  std::vector<Configuration> acc;
  std::size_t first = 0;
  std::size_t last = n;
  if (traj.source) {
    const NodeBasis basis(*traj.source, QuadratureGrid(n));
    acc = sample_accelerations(*traj.source, basis);
    const double s = 1.0 / (traj.period * traj.period);
    for (auto& a : acc) a *= s;
  } else {
    if (n < 3) throw InsufficientData("eom_residual needs at least 3 samples");
    acc.assign(n, Configuration(sys.n_bodies(), sys.dim()));
    for (std::size_t m = 1; m + 1 < n; ++m) {
      const double dt = traj.base_times[m + 1] - traj.base_times[m - 1];
      for (std::size_t j = 0; j < acc[m].flat().size(); ++j)
        acc[m].flat()[j] = (traj.velocities[m + 1].flat()[j] - traj.velocities[m - 1].flat()[j]) / dt;
    }
    first = 1;
    last = n - 1;
  }
  double a_max = 0.0;
  for (std::size_t m = first; m < last; ++m) a_max = std::max(a_max, max_body_norm(acc[m]));
  if (!(a_max > 0.0)) a_max = 1.0;
  double worst = 0.0;
  for (std::size_t m = first; m < last; ++m) worst = std::max(worst, eom_mismatch(sys, traj.positions[m], acc[m], a_max));
  return worst;
}

double total_energy(const BodySystem& sys, const Configuration& x, const Configuration& v) {
  return kinetic_energy(sys, v) + potential(sys, x);
}

EnergyResiduals energy_residuals(const Trajectory& traj) {
  const BodySystem& sys = traj.sys;
  const double H = sys.energy();
  EnergyResiduals r{0.0, 0.0};
  for (std::size_t m = 0; m < traj.size(); ++m) {
    const double e = total_energy(sys, traj.positions[m], traj.velocities[m]);
    r.physical_form = std::max(r.physical_form, std::abs(e - H) / H);
  }
  if (traj.source) {
    const NodeBasis basis(*traj.source, QuadratureGrid(traj.size()));
    const auto q = sample_positions(*traj.source, basis);
    const auto qd = sample_velocities(*traj.source, basis);
    const double inv = 1.0 / (traj.period * traj.period);
    for (std::size_t m = 0; m < q.size(); ++m) {
      const double e = inv * kinetic_energy(sys, qd[m]) + potential(sys, q[m]);
      r.loop_form = std::max(r.loop_form, std::abs(e - H) / H);
    }
  } else {
    r.loop_form = r.physical_form;
  }
  return r;
}

CrosscheckReport symplectic_crosscheck(const Trajectory& traj, std::size_t steps_per_period, double distance_floor) {
  if (steps_per_period < 1000) throw DomainError("symplectic_crosscheck needs at least 1000 steps per period");
  if (traj.size() == 0) throw DomainError("symplectic_crosscheck: empty trajectory");
  const BodySystem& sys = traj.sys;
  const double floor = distance_floor > 0.0 ? distance_floor : sys.distance_floor();
  const double dt = traj.period / static_cast<double>(steps_per_period);
  const std::size_t n = traj.size();

  Configuration x = traj.positions[0];
  Configuration v = traj.velocities[0];
  const double e0 = total_energy(sys, x, v);
  const double e_scale = std::abs(e0) > 0.0 ? std::abs(e0) : 1.0;

  auto accel = [&](const Configuration& pos) {
    if (!(min_pairwise_distance(pos) >= floor)) throw IntegratorBlowup("pairwise distance fell below the floor");
    try {
      return accelerations_of(sys, pos);
    } catch (const CollisionError&) {
      throw IntegratorBlowup("pairwise distance fell below the floor");
    }
  };

  CrosscheckReport rep;
  rep.steps = steps_per_period;
  Configuration a = accel(x);
  for (std::size_t k = 1; k <= steps_per_period; ++k) {
    for (std::size_t j = 0; j < v.flat().size(); ++j) v.flat()[j] += 0.5 * dt * a.flat()[j];
    for (std::size_t j = 0; j < x.flat().size(); ++j) x.flat()[j] += dt * v.flat()[j];
    a = accel(x);
    for (std::size_t j = 0; j < v.flat().size(); ++j) v.flat()[j] += 0.5 * dt * a.flat()[j];
    for (double c : x.flat())
      if (!std::isfinite(c)) throw IntegratorBlowup("non-finite state");

    rep.energy_drift = std::max(rep.energy_drift, std::abs(total_energy(sys, x, v) - e0) / e_scale);
    if (traj.source) {
      const double s = static_cast<double>(k) / static_cast<double>(steps_per_period);
      rep.max_position_gap = std::max(rep.max_position_gap, max_body_gap(x, evaluate(*traj.source, s)));
    } else if ((k * n) % steps_per_period == 0) {
      const std::size_t m = (k * n / steps_per_period) % n;
      rep.max_position_gap = std::max(rep.max_position_gap, max_body_gap(x, traj.positions[m]));
    }
  }
  rep.closure_gap = max_body_gap(x, traj.positions[0]);
  return rep;
}

}  // namespace strongorbit
