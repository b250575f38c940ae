#include "strongorbit/continuation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "strongorbit/errors.hpp"

namespace strongorbit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double norm_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t k = 0; k < n; ++k) body(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = next++; k < n; k = next++) body(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Loop time of physical sample position between m and m+1, as a fraction in [0, 1].
double loop_time(std::size_t m, std::size_t n) { return static_cast<double>(m) / static_cast<double>(n); }

double body_radius_at(const LoopPath& path, double s, std::size_t body) {
  const Configuration q = evaluate(path, s);
  return norm_of(q.body(body));
}

std::vector<double> stacked_radius(const Trajectory& traj) {
  std::vector<double> r(traj.size());
  for (std::size_t m = 0; m < r.size(); ++m) r[m] = traj.positions[m].norm();
  return r;
}

}  // namespace

void ContinuationSchedule::validate() const {
  if (radii.empty()) throw ValidationError("continuation schedule: R list is empty");
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] > 0.0) || !std::isfinite(radii[k])) throw ValidationError("continuation schedule: radii must be > 0");
    if (k > 0 && !(radii[k] > radii[k - 1])) throw ValidationError("continuation schedule: radii must be increasing");
  }
  if (!(d1 > 1.0) || !(d2 > 1.0)) throw ValidationError("continuation schedule: d1 and d2 must exceed 1");
  if (!(1.0 - 1.0 / d2 > d1 - 1.0)) throw ValidationError("continuation schedule: need 1 - 1/d2 > d1 - 1 > 0");
}

ContinuationSchedule ContinuationSchedule::geometric(double first, double ratio, std::size_t count) {
  ContinuationSchedule s;
  double r = first;
  for (std::size_t k = 0; k < count; ++k, r *= ratio) s.radii.push_back(r);
  return s;
}

std::optional<CrossingTimes> crossing_times(const Trajectory& traj, double radius, double d1, double d2) {
  const std::size_t n = traj.size();
  if (n < 2) throw InsufficientData("crossing_times needs at least 2 samples");
  const std::size_t nb = traj.sys.n_bodies();
  const double levels[2] = {d1 * radius, radius / d2};
  const double T = traj.period;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::size_t count = 0;

  auto add = [&](double t) {
    lo = std::min(lo, t);
    hi = std::max(hi, t);
    ++count;
  };

  for (std::size_t i = 0; i < nb; ++i) {
    std::vector<double> r(n + 1);
    for (std::size_t m = 0; m < n; ++m) r[m] = norm_of(traj.positions[m].body(i));
    r[n] = r[0];  // u(T/2) = u(-T/2)
    for (double level : levels) {
      for (std::size_t m = 0; m < n; ++m) {
        const double ga = r[m] - level;
        const double gb = r[m + 1] - level;
        const double ta = traj.time(m);
        const double tb = m + 1 < n ? traj.time(m + 1) : traj.time(0) + T;
        if (ga == 0.0 && m > 0) add(ta);
        if (!((ga < 0.0 && gb > 0.0) || (ga > 0.0 && gb < 0.0))) continue;
        if (traj.source) {
          double sa = loop_time(m, n);
          double sb = loop_time(m + 1, n);
          double fa = ga;
          while ((sb - sa) > 1e-10) {
            const double sm = 0.5 * (sa + sb);
            const double fm = body_radius_at(*traj.source, sm, i) - level;
            if (fm == 0.0) {
              sa = sb = sm;
              break;
            }
            if ((fm < 0.0) == (fa < 0.0)) {
              sa = sm;
              fa = fm;
            } else {
              sb = sm;
            }
          }
          add(ta + (0.5 * (sa + sb) - loop_time(m, n)) * T);
        } else {
          add(ta + (tb - ta) * ga / (ga - gb));
        }
      }
    }
  }
  if (count == 0) return std::nullopt;
  return CrossingTimes{lo, hi, count};
}

Trajectory time_shift(const Trajectory& traj, double t_star) {
  Trajectory out = traj;
  out.shift = traj.shift + t_star;
  return out;
}

double escape_speed(const Trajectory& traj) {
  const std::size_t n = traj.size();
  double sum = 0.0;
  std::size_t cnt = 0;
  for (std::size_t m = 0; m < n; ++m) {
    const double f = loop_time(m, n);
    const bool near_end = (f >= 0.05 && f <= 0.15) || (f >= 0.85 && f <= 0.95);
    if (!near_end) continue;
    sum += traj.velocities[m].norm();
    ++cnt;
  }
  return cnt ? sum / static_cast<double>(cnt) : kNaN;
}

std::size_t trend_violations(const std::vector<double>& values, std::size_t from) {
  std::size_t v = 0;
  for (std::size_t k = from + 1; k < values.size(); ++k)
    if (values[k] < values[k - 1]) ++v;
  return v;
}

TrendCheck margins_trend(const std::vector<ContinuationRecord>& records, std::size_t from_index,
                         std::size_t allowed_violations) {
  std::vector<double> plus, minus;
  std::size_t from = 0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (!records[k].usable()) continue;
    if (k < from_index) ++from;
    plus.push_back(records[k].margin_plus);
    minus.push_back(records[k].margin_minus);
  }
  TrendCheck t;
  t.from_index = from_index;
  t.violations_plus = trend_violations(plus, from);
  t.violations_minus = trend_violations(minus, from);
  t.pass = plus.size() >= from + 2 && t.violations_plus <= allowed_violations && t.violations_minus <= allowed_violations;
  return t;
}

BandCheck min_dist_band(const std::vector<ContinuationRecord>& records, double max_ratio) {
  BandCheck b;
  b.min = std::numeric_limits<double>::infinity();
  b.max = 0.0;
  for (const auto& r : records)
    if (r.converged) {
      b.min = std::min(b.min, r.min_dist);
      b.max = std::max(b.max, r.min_dist);
    }
  if (!(b.max > 0.0)) return b;
  b.ratio = b.max / b.min;
  b.pass = b.ratio <= max_ratio;
  return b;
}

double min_dist_upper_bound(const BodySystem& sys) {
  const double a = sys.alpha();
  return std::pow((a - 2.0) * ordered_pair_mass_sum(sys) / (4.0 * sys.energy()) * 1.1, 1.0 / a);
}

UpperBoundCheck min_dist_upper_check(const std::vector<ContinuationRecord>& records, const BodySystem& sys) {
  UpperBoundCheck u;
  u.bound = min_dist_upper_bound(sys);
  bool any = false;
  for (const auto& r : records)
    if (r.converged) {
      any = true;
      u.worst = std::max(u.worst, r.min_dist);
      if (r.min_dist > u.bound) ++u.violations;
    }
  u.pass = any && u.violations == 0;
  return u;
}

ClassificationReport classify_hyperbolic(const std::vector<ContinuationRecord>& records, const Trajectory& traj) {
  if (records.size() < 3) throw InsufficientData("classification needs at least 3 continuation records");
  ClassificationReport c;

  // (a) margins grow along the schedule
  {
    std::vector<double> plus, minus;
    for (const auto& r : records)
      if (r.usable()) {
        plus.push_back(r.margin_plus);
        minus.push_back(r.margin_minus);
      }
    c.a_violations = std::max(trend_violations(plus, 0), trend_violations(minus, 0));
    c.a_pass = plus.size() >= 2 && c.a_violations <= 1 && plus.back() > plus.front() && minus.back() > minus.front();
  }

  // locate the passage
  const std::size_t n = traj.size();
  const auto r = stacked_radius(traj);
  const std::size_t centre = static_cast<std::size_t>(std::min_element(r.begin(), r.end()) - r.begin());
  const std::size_t half = n / 2;
  std::size_t right = 1, left = 1;
  for (std::size_t j = 1; j < half; ++j) {
    if (r[(centre + j) % n] > r[(centre + right) % n]) right = j;
    if (r[(centre + n - j) % n] > r[(centre + n - left) % n]) left = j;
  }
  const std::size_t w = std::min(left, right);
  const double dt = traj.period / static_cast<double>(n);
  c.passage_center = traj.time(centre);
  c.passage_half_width = static_cast<double>(w) * dt;

  // (b) radial speed over the outer part of the passage
  {
    const double H = traj.sys.energy();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double kin = 0, sq = 0;
    std::size_t cnt = 0;
    for (std::size_t j = 1; j <= w; ++j) {
      const double x = static_cast<double>(j);
      if (3.0 * x < static_cast<double>(w) || x > 0.9 * static_cast<double>(w)) continue;
      for (std::size_t m : {(centre + j) % n, (centre + n - j) % n}) {
        const double tx = x * dt;
        sx += tx;
        sy += r[m];
        sxx += tx * tx;
        sxy += tx * r[m];
        ++cnt;
        for (std::size_t i = 0; i < traj.sys.n_bodies(); ++i) {
          const double v = norm_of(traj.velocities[m].body(i));
          kin += traj.sys.mass(i) * v * v;
          sq += v * v;
        }
      }
    }
    if (cnt >= 3 && sq > 0.0) {
      const double k = static_cast<double>(cnt);
      c.b_slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
      c.m_effective = kin / sq;
      c.b_expected = std::sqrt(2.0 * H / c.m_effective);
      c.b_rel_error = std::abs(c.b_slope - c.b_expected) / c.b_expected;
      c.b_pass = c.b_rel_error <= 0.2;
    }
  }

  // (c) core stays away from collision
  {
    double md = std::numeric_limits<double>::infinity();
    for (const auto& rec : records)
      if (rec.converged) md = std::min(md, rec.min_dist);
    c.c_core_min = r[centre];
    if (std::isfinite(md)) {
      c.c_threshold = 0.1 * md;
      c.c_pass = c.c_core_min >= c.c_threshold;
    }
  }

  c.label = (c.a_pass && c.b_pass && c.c_pass) ? "hyperbolic-approximant" : "withheld";
  return c;
}

SweepResult run_sweep(const BodySystem& sys, const ContinuationSchedule& sched, const SolveConfig& cfg,
                      const SweepOptions& opts) {
  sched.validate();
  cfg.validate(sys);
  const std::size_t nr = sched.radii.size();
  const QuadratureGrid grid(opts.quadrature_nodes ? opts.quadrature_nodes : 8 * cfg.harmonics);

  SweepResult res;
  res.records.resize(nr);
  res.reports.resize(nr);
  res.trajectories.resize(nr);

  auto cold_solve = [&](std::size_t k) {
    SolveConfig c = cfg;
    c.radius = sched.radii[k];
    return minimize(sys, c, grid);
  };
  auto note_failure = [&](std::size_t k, const std::string& cause) {
    res.records[k].converged = false;
    res.records[k].cause = cause;
  };
  auto solve_one = [&](std::size_t k, const std::optional<LoopPath>& warm, double warm_radius) {
    auto& rec = res.records[k];
    rec.R = sched.radii[k];
    rec.report_id = "R_" + std::to_string(k);
    if (warm) {
      SolveConfig c = cfg;
      c.radius = rec.R;
      try {
        res.reports[k] = minimize_from(sys, c, grid, warm->scaled(rec.R / warm_radius));
        rec.warm_started = true;
        return;
      } catch (const Error&) {
        // fall back to a cold start
      }
    }
    try {
      res.reports[k] = cold_solve(k);
    } catch (const NonConvergence& e) {
      note_failure(k, e.what());
    } catch (const Error& e) {
      note_failure(k, e.what());
    }
  };

  if (opts.cold_start) {
    parallel_for(nr, opts.threads, [&](std::size_t k) { solve_one(k, std::nullopt, 0.0); });
  } else {
    std::optional<LoopPath> prev;
    double prev_r = 0.0;
    for (std::size_t k = 0; k < nr; ++k) {
      solve_one(k, prev, prev_r);
      if (res.reports[k]) {
        prev = res.reports[k]->path;
        prev_r = sched.radii[k];
      }
    }
  }

  // verification and crossing diagnostics
  parallel_for(nr, opts.threads, [&](std::size_t k) {
    auto& rec = res.records[k];
    if (!res.reports[k]) {
      rec.t_plus = rec.t_minus = rec.margin_plus = rec.margin_minus = rec.t_star = kNaN;
      rec.T_R = rec.escape_speed = rec.min_dist = rec.f_value = kNaN;
      return;
    }
    const SolveReport& rep = *res.reports[k];
    rec.converged = rep.converged;
    rec.f_value = rep.f_value;
    rec.min_dist = rep.min_dist;
    rec.virial_res = rep.virial_res;
    rec.iters = rep.iters;
    rec.T_R = period_from_path(rep.path, grid, sys);
    Trajectory traj = rescale(rep.path, rec.T_R, sys, opts.samples);
    rec.eom_residual = eom_residual(traj);
    const auto er = energy_residuals(traj);
    rec.energy_residual = std::max(er.loop_form, er.physical_form);
    if (opts.crosscheck_steps) {
      try {
        const auto cc = symplectic_crosscheck(traj, opts.crosscheck_steps);
        rec.position_gap = cc.max_position_gap;
        rec.energy_drift = cc.energy_drift;
      } catch (const IntegratorBlowup&) {
        rec.position_gap = rec.energy_drift = std::numeric_limits<double>::infinity();
      }
    }
    rec.escape_speed = escape_speed(traj);
    const auto cross = crossing_times(traj, rec.R, sched.d1, sched.d2);
    if (!cross) {
      rec.s_empty = true;
      rec.t_plus = rec.t_minus = rec.margin_plus = rec.margin_minus = rec.t_star = kNaN;
      res.trajectories[k] = std::move(traj);
      return;
    }
    rec.t_minus = cross->t_minus;
    rec.t_plus = cross->t_plus;
    rec.margin_plus = 0.5 * rec.T_R - rec.t_plus;
    rec.margin_minus = rec.t_minus + 0.5 * rec.T_R;
    rec.t_star = 0.5 * (rec.t_plus + rec.t_minus);
    res.trajectories[k] = time_shift(traj, rec.t_star);
  });

  for (const auto& r : res.records)
    if (!r.converged) ++res.failures;

  res.trend = margins_trend(res.records, nr / 4);
  res.band = min_dist_band(res.records);
  res.upper_bound = min_dist_upper_check(res.records, sys);

  if (opts.warm_cold_spot_check && !opts.cold_start) {
    for (std::size_t k = nr; k-- > 0;) {
      if (!res.records[k].converged || !res.records[k].warm_started) continue;
      WarmColdCheck w;
      w.R = sched.radii[k];
      w.f_warm = res.records[k].f_value;
      try {
        w.f_cold = cold_solve(k).f_value;
        w.rel_diff = std::abs(w.f_warm - w.f_cold) / std::abs(w.f_cold);
        w.pass = w.rel_diff <= 1e-8;
      } catch (const Error&) {
        w.f_cold = kNaN;
        w.rel_diff = kNaN;
      }
      res.warm_cold = w;
      break;
    }
  }

  if (nr >= 3) {
    for (std::size_t k = nr; k-- > 0;)
      if (res.trajectories[k] && res.records[k].converged) {
        res.classification = classify_hyperbolic(res.records, *res.trajectories[k]);
        break;
      }
  }

  if (2 * res.failures > nr && opts.throw_on_failure)
    throw SweepFailed("sweep failed at " + std::to_string(res.failures) + " of " + std::to_string(nr) + " radii");
  return res;
}

}  // namespace strongorbit
