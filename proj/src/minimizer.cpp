#include "strongorbit/minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

namespace strongorbit {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Diagonal of the kinetic form, m_i (2 pi k)^2, floored for the constant slot.
std::vector<double> kinetic_diagonal(const LoopPath& shape, const BodySystem& sys) {
  std::vector<double> diag(shape.size());
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < shape.n_bodies(); ++i)
    for (std::size_t h = 0; h < shape.slots(); ++h) {
      const double w = two_pi * std::max(1, shape.frequency(h));
      for (int s = 0; s < 2; ++s)
        for (std::size_t c = 0; c < shape.dim(); ++c) diag[shape.index(i, h, s, c)] = sys.mass(i) * w * w;
    }
  return diag;
}

struct EndpointTerms {
  std::vector<double> residual;  // |q_i(0)| - R
  std::vector<std::vector<double>> unit;  // q_i(0) / |q_i(0)|
};

EndpointTerms endpoint_terms(const LoopPath& path, double radius) {
  EndpointTerms t;
  for (std::size_t i = 0; i < path.n_bodies(); ++i) {
    auto q0 = start_point(path, i);
    const double r = norm2(q0);
    t.residual.push_back(r - radius);
    if (r > 0.0)
      for (auto& x : q0) x /= r;
    t.unit.push_back(std::move(q0));
  }
  return t;
}

// Adds w_i * d|q_i(0)|/dcoeff to grad for each body.
void add_endpoint_normals(const LoopPath& path, const EndpointTerms& t, std::span<const double> w,
                          std::span<double> grad) {
  for (std::size_t i = 0; i < path.n_bodies(); ++i)
    for (std::size_t h = 0; h < path.slots(); ++h)
      for (std::size_t c = 0; c < path.dim(); ++c) grad[path.index(i, h, 0, c)] += w[i] * t.unit[i][c];
}

struct Evaluation {
  double objective = 0.0;
  ActionValue action;
  EndpointTerms ends;
  std::vector<double> grad_f;
  std::vector<double> grad;  // of the stage objective
};

class StageObjective {
 public:
  StageObjective(const LoopFunctional& fn, double radius) : fn_(fn), radius_(radius) {}

  double mu = 0.0;
  std::vector<double> lambda;

  Evaluation operator()(const LoopPath& path) const {
    Evaluation e;
    e.action = fn_.value_and_gradient(path, e.grad_f);
    e.ends = endpoint_terms(path, radius_);
    e.objective = e.action.f;
    std::vector<double> w(path.n_bodies());
    for (std::size_t i = 0; i < path.n_bodies(); ++i) {
      const double c = e.ends.residual[i];
      e.objective += lambda[i] * c + mu * c * c;
      w[i] = lambda[i] + 2.0 * mu * c;
    }
    e.grad = e.grad_f;
    add_endpoint_normals(path, e.ends, w, e.grad);
    return e;
  }

 private:
  const LoopFunctional& fn_;
  double radius_;
};

LoopPath with_coeffs(const LoopPath& shape, std::span<const double> x) {
  LoopPath p = shape;
  std::copy(x.begin(), x.end(), p.coeffs().begin());
  return p;
}

// Project out the normals of |q_i(0)| (one per body, mutually orthogonal).
std::vector<double> project_endpoint_normals(const LoopPath& path, std::span<const double> grad) {
  std::vector<double> g(grad.begin(), grad.end());
  const auto t = endpoint_terms(path, 0.0);
  const double slots = static_cast<double>(path.slots());
  for (std::size_t i = 0; i < path.n_bodies(); ++i) {
    double proj = 0.0;
    for (std::size_t h = 0; h < path.slots(); ++h)
      for (std::size_t c = 0; c < path.dim(); ++c) proj += g[path.index(i, h, 0, c)] * t.unit[i][c];
    proj /= slots;
    for (std::size_t h = 0; h < path.slots(); ++h)
      for (std::size_t c = 0; c < path.dim(); ++c) g[path.index(i, h, 0, c)] -= proj * t.unit[i][c];
  }
  return g;
}

bool collision_free(const LoopFunctional& fn, const LoopPath& p, double guard, double* dist) {
  try {
    const double d = fn.min_distance(p);
    if (dist) *dist = d;
    return std::isfinite(d) && d >= guard;
  } catch (const CollisionError&) {
    if (dist) *dist = 0.0;
    return false;
  }
}

void fill_diagnostics(SolveReport& r, const LoopFunctional& fn, const Evaluation& e, double radius) {
  r.f_value = e.action.f;
  r.kinetic = e.action.kinetic;
  r.mean_excess = e.action.mean_excess;
  r.projected_grad_norm = norm2(project_endpoint_normals(r.path, e.grad_f));
  r.endpoint_res = endpoint_residual(r.path, radius);
  r.virial_res = std::abs(fn.virial_integral(r.path));
  r.min_dist = fn.min_distance(r.path);
}

constexpr std::size_t kStallLimit = 50;

}  // namespace

std::vector<double> default_penalty_schedule(double energy) {
  return {10.0 * energy, 1e2 * energy, 1e3 * energy, 1e4 * energy, 1e6 * energy};
}

std::vector<double> SolveConfig::schedule_for(const BodySystem& sys) const {
  return penalty_schedule.empty() ? default_penalty_schedule(sys.energy()) : penalty_schedule;
}

void SolveConfig::validate(const BodySystem& sys) const {
  auto fail = [](const std::string& m) { throw ValidationError("SolveConfig: " + m); };
  if (!(radius > 0.0) || !std::isfinite(radius)) fail("R must be > 0");
  if (harmonics < 1) fail("harmonics must be >= 1");
  const auto sched = schedule_for(sys);
  if (sched.empty()) fail("penalty_schedule is empty");
  for (std::size_t k = 0; k < sched.size(); ++k) {
    if (!(sched[k] > 0.0)) fail("penalty weights must be positive");
    if (k > 0 && !(sched[k] > sched[k - 1])) fail("penalty_schedule must be strictly increasing");
  }
  if (sched.back() < 1e6 * sys.energy()) fail("final penalty weight must be >= 1e6*H");
  if (grad_tol < 0.0 || !std::isfinite(grad_tol)) fail("grad_tol must be > 0 (or 0 for the default)");
  if (!(min_dist_guard > 0.0)) fail("min_dist_guard must be > 0");
  if (!(ls_backtrack > 0.0 && ls_backtrack < 1.0)) fail("ls_backtrack must lie in (0,1)");
  if (ls_max_steps < 1) fail("ls_max_steps must be >= 1");
  if (max_iters < 1) fail("max_iters must be >= 1");
  if (!(armijo > 0.0 && armijo < 1.0)) fail("armijo must lie in (0,1)");
  if (history_pairs < 1) fail("history_pairs must be >= 1");
  if (perturbation < 0.0) fail("perturbation must be >= 0");
}

NonConvergence::NonConvergence(SolveReport best)
    : Error([&] {
        std::ostringstream os;
        os << "no convergence at R=" << best.radius << " after " << best.iters
           << " iterations (projected grad " << best.projected_grad_norm << ", tol " << best.grad_tol
           << ", endpoint " << best.endpoint_res << ")";
        if (!best.message.empty()) os << ": " << best.message;
        return os.str();
      }()),
      best_(std::move(best)) {}

std::optional<double> matched_ring_radius(const BodySystem& sys) {
  const std::size_t n = sys.n_bodies();
  for (std::size_t i = 1; i < n; ++i)
    if (sys.mass(i) != sys.mass(0)) return std::nullopt;
  double v1 = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double chord = 2.0 * std::sin(std::numbers::pi * static_cast<double>(j - i) / static_cast<double>(n));
      v1 += sys.mass(i) * sys.mass(j) * std::pow(chord, -sys.alpha());
    }
  return std::pow((0.5 * sys.alpha() - 1.0) * v1 / sys.energy(), 1.0 / sys.alpha());
}

std::uint64_t derived_seed(std::uint64_t seed, std::size_t attempt) {
  if (attempt == 0) return seed;
  // splitmix64 step
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(attempt);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

LoopPath initial_loop(const BodySystem& sys, double radius, std::size_t harmonics, std::uint64_t seed,
                      double perturbation) {
  if (sys.dim() < 2) throw DomainError("initial_loop needs d >= 2");
  if (!(radius > 0.0)) throw DomainError("initial_loop needs R > 0");
  if (harmonics < 1) throw DomainError("initial_loop needs K >= 1");
  const std::size_t n = sys.n_bodies();
  LoopPath p(n, sys.dim(), harmonics, Basis::odd);
  for (std::size_t b = 0; b < n; ++b) {
    const double phi = 2.0 * std::numbers::pi * static_cast<double>(b + 1) / static_cast<double>(n);
    p.cos_coeff(b, 0, 0) = radius * std::cos(phi);
    p.cos_coeff(b, 0, 1) = radius * std::sin(phi);
    p.sin_coeff(b, 0, 0) = -radius * std::sin(phi);
    p.sin_coeff(b, 0, 1) = radius * std::cos(phi);
  }
  if (perturbation > 0.0 && harmonics > 1) {
    std::mt19937_64 gen(seed);
    const double amp = perturbation * radius;
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t h = 1; h < harmonics; ++h)
        for (int s = 0; s < 2; ++s)
          for (std::size_t c = 0; c < sys.dim(); ++c) p.coeffs()[p.index(b, h, s, c)] = amp * (2.0 * uniform01(gen) - 1.0);
    // keep |Q_i(0)| = R exactly: fold the cosine perturbation sum back into the k = 1 slot
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < sys.dim(); ++c) {
        double extra = 0.0;
        for (std::size_t h = 1; h < harmonics; ++h) extra += p.cos_coeff(b, h, c);
        p.cos_coeff(b, 0, c) -= extra;
      }
  }
  return p;
}

std::vector<double> projected_gradient(const LoopPath& path, std::span<const double> grad) {
  return project_endpoint_normals(path, grad);
}

SolveReport minimize_from(const BodySystem& sys, const SolveConfig& cfg, const QuadratureGrid& grid,
                          const LoopPath& start) {
  cfg.validate(sys);
  if (start.basis() != Basis::odd || start.n_bodies() != sys.n_bodies() || start.dim() != sys.dim())
    throw DomainError("minimize_from: start loop does not match the system");
  grid.require_resolves(start);
  const LoopFunctional fn(sys, grid, start);
  const double R = cfg.radius;

  SolveReport report;
  report.radius = R;
  report.seed = cfg.seed;
  report.min_dist_guard = cfg.min_dist_guard;
  report.path = start;

  double start_dist = 0.0;
  if (!collision_free(fn, start, cfg.min_dist_guard, &start_dist))
    throw DomainError("minimize: initial loop is not collision-free on the grid");

  StageObjective obj(fn, R);
  obj.lambda.assign(sys.n_bodies(), 0.0);
  const auto schedule = cfg.schedule_for(sys);
  const auto diag = kinetic_diagonal(start, sys);

  Evaluation cur = [&] {
    obj.mu = schedule.front();
    return obj(start);
  }();
  report.f_start = cur.action.f;
  const double tol = cfg.grad_tol > 0.0 ? cfg.grad_tol : 1e-8 * std::max(1.0, cur.action.f);
  report.grad_tol = tol;
  const double endpoint_tol = 1e-8 * R;

  LoopPath x = start;
  double extra_mu = schedule.back();
  double last_res = std::numeric_limits<double>::infinity();
  std::size_t iters = 0;
  std::size_t stage = 0;
  bool budget_out = false;
  std::string message;
  const std::size_t max_stages = schedule.size() + cfg.extra_stages;

  auto record = [&](const Evaluation& e) {
    if (cfg.record_history)
      report.history.push_back({stage, iters, e.objective, e.action.f, e.action.kinetic});
  };

  for (; stage < max_stages && !budget_out; ++stage) {
    obj.mu = stage < schedule.size() ? schedule[stage] : extra_mu;
    cur = obj(x);
    record(cur);

    std::deque<std::pair<std::vector<double>, std::vector<double>>> mem;
    double gamma = 0.0;
    {
      // initial scale: one unit of the diagonal model per unit of mean excess
      gamma = cur.action.mean_excess > 0.0 ? 1.0 / cur.action.mean_excess : 1.0;
    }

    double best_gnorm = norm2(cur.grad);
    std::size_t stalled = 0;
    while (true) {
      const double gnorm = norm2(cur.grad);
      if (gnorm <= 0.5 * tol) break;
      if (iters >= cfg.max_iters) {
        budget_out = true;
        break;
      }
      // two-loop recursion with diagonal initial matrix gamma * D^-1
      std::vector<double> q = cur.grad;
      std::vector<double> alpha(mem.size());
      for (std::size_t k = mem.size(); k-- > 0;) {
        const auto& [s, y] = mem[k];
        const double rho = 1.0 / dot(y, s);
        alpha[k] = rho * dot(s, q);
        for (std::size_t j = 0; j < q.size(); ++j) q[j] -= alpha[k] * y[j];
      }
      for (std::size_t j = 0; j < q.size(); ++j) q[j] *= gamma / diag[j];
      for (std::size_t k = 0; k < mem.size(); ++k) {
        const auto& [s, y] = mem[k];
        const double rho = 1.0 / dot(y, s);
        const double beta = rho * dot(y, q);
        for (std::size_t j = 0; j < q.size(); ++j) q[j] += (alpha[k] - beta) * s[j];
      }
      std::vector<double> dir(q.size());
      for (std::size_t j = 0; j < q.size(); ++j) dir[j] = -q[j];
      double gd = dot(cur.grad, dir);
      if (!(gd < 0.0)) {
        mem.clear();
        for (std::size_t j = 0; j < dir.size(); ++j) dir[j] = -gamma * cur.grad[j] / diag[j];
        gd = dot(cur.grad, dir);
      }

      const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(cur.objective);
      bool accepted = false;
      bool guard_only = true;
      Evaluation trial;
      LoopPath xt;
      double step = 1.0;
      for (std::size_t ls = 0; ls < cfg.ls_max_steps; ++ls, step *= cfg.ls_backtrack) {
        std::vector<double> xs(x.coeffs().begin(), x.coeffs().end());
        for (std::size_t j = 0; j < xs.size(); ++j) xs[j] += step * dir[j];
        xt = with_coeffs(x, xs);
        if (!collision_free(fn, xt, cfg.min_dist_guard, nullptr)) continue;
        try {
          trial = obj(xt);
        } catch (const CollisionError&) {
          continue;
        }
        guard_only = false;
        if (!std::isfinite(trial.objective)) continue;
        if (trial.objective <= cur.objective + cfg.armijo * step * gd) {
          accepted = true;
          break;
        }
        // below the resolution of the objective, descent is judged by the gradient
        if (std::abs(trial.objective - cur.objective) <= noise && norm2(trial.grad) < gnorm) {
          accepted = true;
          break;
        }
      }
      ++iters;
      if (!accepted) {
        if (!mem.empty()) {
          mem.clear();
          continue;
        }
        if (guard_only) {
          report.path = x;
          report.iters = iters;
          throw CollisionGuardTripped("no collision-free step length above machine precision");
        }
        message = "line search stalled";
        break;  // at the precision floor of this stage
      }
      std::vector<double> s(dir.size()), y(dir.size());
      for (std::size_t j = 0; j < s.size(); ++j) {
        s[j] = xt.coeffs()[j] - x.coeffs()[j];
        y[j] = trial.grad[j] - cur.grad[j];
      }
      const double sy = dot(s, y);
      if (sy > 1e-14 * norm2(s) * norm2(y)) {
        double ydy = 0.0;
        for (std::size_t j = 0; j < y.size(); ++j) ydy += y[j] * y[j] / diag[j];
        gamma = sy / ydy;
        mem.emplace_back(std::move(s), std::move(y));
        if (mem.size() > cfg.history_pairs) mem.pop_front();
      }
      if (norm2(trial.grad) < 0.99 * best_gnorm) {
        best_gnorm = norm2(trial.grad);
        stalled = 0;
      } else if (++stalled >= kStallLimit) {
        x = std::move(xt);
        cur = std::move(trial);
        record(cur);
        message = "gradient stalled at round-off level";
        break;
      }
      x = std::move(xt);
      cur = std::move(trial);
      record(cur);
    }

    // multiplier update
    for (std::size_t i = 0; i < sys.n_bodies(); ++i) obj.lambda[i] += 2.0 * obj.mu * cur.ends.residual[i];

    if (stage + 1 >= schedule.size()) {
      report.path = x;
      const double pg = norm2(project_endpoint_normals(x, cur.grad_f));
      const double res = endpoint_residual(x, R);
      if (pg <= tol && res <= 0.5 * endpoint_tol) {
        ++stage;
        break;
      }
      // stiffen the endpoint term when the multiplier iteration is slow
      if (stage + 1 > schedule.size() && res > 0.25 * last_res) extra_mu *= 10.0;
      last_res = res;
    }
  }

  report.path = x;
  report.iters = iters;
  report.stages = stage;
  fill_diagnostics(report, fn, cur, R);
  report.multipliers.resize(sys.n_bodies());
  {
    // multiplier of |q_i(0)| = R implied by the f-gradient: grad f = -lambda_i * normal_i
    const auto t = endpoint_terms(x, R);
    for (std::size_t i = 0; i < sys.n_bodies(); ++i) {
      double proj = 0.0;
      for (std::size_t h = 0; h < x.slots(); ++h)
        for (std::size_t c = 0; c < x.dim(); ++c) proj += cur.grad_f[x.index(i, h, 0, c)] * t.unit[i][c];
      report.multipliers[i] = -proj / static_cast<double>(x.slots());
    }
  }
  report.converged = report.projected_grad_norm <= tol && report.endpoint_res <= endpoint_tol &&
                     report.min_dist >= cfg.min_dist_guard;
  if (!report.converged) {
    report.message = budget_out ? "iteration budget exhausted" : (message.empty() ? "stage limit reached" : message);
    throw NonConvergence(std::move(report));
  }
  return report;
}

SolveReport minimize(const BodySystem& sys, const SolveConfig& cfg, const QuadratureGrid& grid) {
  cfg.validate(sys);
  std::optional<SolveReport> best;
  for (std::size_t attempt = 0; attempt <= cfg.retries; ++attempt) {
    SolveConfig c = cfg;
    c.seed = derived_seed(cfg.seed, attempt);
    const LoopPath start = initial_loop(sys, cfg.radius, cfg.harmonics, c.seed, cfg.perturbation);
    try {
      return minimize_from(sys, c, grid, start);
    } catch (const NonConvergence& e) {
      if (!best || e.best().projected_grad_norm < best->projected_grad_norm) best = e.best();
    } catch (const CollisionGuardTripped&) {
      if (attempt == cfg.retries && !best) throw;
    }
  }
  throw NonConvergence(std::move(*best));
}

double symmetric_criticality_residual(const LoopPath& path, const BodySystem& sys, const QuadratureGrid& grid) {
  const LoopPath full = path.basis() == Basis::full ? path : path.embedded_full();
  const LoopFunctional fn(sys, grid, full);
  std::vector<double> g;
  fn.value_and_gradient(full, g);

  // normals of |q_i(0)| and |q_i(1/2)|; both live on the cosine slots only
  for (std::size_t i = 0; i < full.n_bodies(); ++i) {
    const auto u = start_point(full, i);
    const auto qh = evaluate(full, 0.5);
    std::vector<double> v(qh.body(i).begin(), qh.body(i).end());
    const double un = norm2(u), vn = norm2(v);
    std::vector<std::vector<double>> basis;
    for (int which = 0; which < 2; ++which) {
      std::vector<double> n(g.size(), 0.0);
      for (std::size_t h = 0; h < full.slots(); ++h) {
        const double sign = which == 0 ? 1.0 : ((full.frequency(h) % 2) ? -1.0 : 1.0);
        for (std::size_t c = 0; c < full.dim(); ++c)
          n[full.index(i, h, 0, c)] = which == 0 ? (un > 0 ? u[c] / un : 0.0) : sign * (vn > 0 ? v[c] / vn : 0.0);
      }
      for (const auto& b : basis) {
        const double p = dot(n, b);
        for (std::size_t j = 0; j < n.size(); ++j) n[j] -= p * b[j];
      }
      const double nn = norm2(n);
      if (nn > 1e-12) {
        for (auto& x : n) x /= nn;
        basis.push_back(std::move(n));
      }
    }
    for (const auto& b : basis) {
      const double p = dot(g, b);
      for (std::size_t j = 0; j < g.size(); ++j) g[j] -= p * b[j];
    }
  }
  // sin part of the constant slot carries no degree of freedom
  for (std::size_t i = 0; i < full.n_bodies(); ++i)
    for (std::size_t c = 0; c < full.dim(); ++c) g[full.index(i, 0, 1, c)] = 0.0;
  return norm2(g);
}

double symmetric_criticality_check(const SolveReport& report, const BodySystem& sys, const QuadratureGrid& grid) {
  return symmetric_criticality_residual(report.path, sys, grid);
}

}  // namespace strongorbit
