#include <doctest.h>

#include <cmath>

#include "../support.hpp"
#include "strongorbit/errors.hpp"
#include "strongorbit/minimizer.hpp"

using namespace strongorbit;
using testing::kPi;
using testing::Rng;

namespace {

const BodySystem kTwo({1, 1}, 2, 3, 1);

SolveConfig config_at(double R, std::size_t K) {
  SolveConfig c;
  c.radius = R;
  c.harmonics = K;
  return c;
}

// Independent coarse optimizer: the endpoint constraint is eliminated by writing
// the k=1 cosine coefficient as R (cos th_i, sin th_i) minus the other cosine
// coefficients; descent uses finite-difference gradients of the oracle action
// with Barzilai-Borwein steps, restarted from several random loops.
struct Eliminated {
  std::size_t n, K;
  double R;
  std::size_t size() const { return n * (1 + 2 + 4 * (K - 1)); }
  LoopPath loop(const std::vector<double>& x) const {
    LoopPath p(n, 2, K);
    std::size_t at = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double th = x[at++];
      p.sin_coeff(i, 0, 0) = x[at++];
      p.sin_coeff(i, 0, 1) = x[at++];
      double sx = 0, sy = 0;
      for (std::size_t h = 1; h < K; ++h) {
        p.cos_coeff(i, h, 0) = x[at++];
        p.cos_coeff(i, h, 1) = x[at++];
        p.sin_coeff(i, h, 0) = x[at++];
        p.sin_coeff(i, h, 1) = x[at++];
        sx += p.cos_coeff(i, h, 0);
        sy += p.cos_coeff(i, h, 1);
      }
      p.cos_coeff(i, 0, 0) = R * std::cos(th) - sx;
      p.cos_coeff(i, 0, 1) = R * std::sin(th) - sy;
    }
    return p;
  }
};

double coarse_minimum(const BodySystem& sys, double R, std::size_t K, std::size_t restarts, std::uint64_t seed) {
  const Eliminated e{sys.n_bodies(), K, R};
  Rng rng(seed);
  const std::size_t nodes = 8 * K;
  auto F = [&](const std::vector<double>& x) {
    const LoopPath p = e.loop(x);
    for (std::size_t m = 0; m < nodes; ++m) {
      const auto q = testing::oracle_positions(p, static_cast<double>(m) / nodes);
      const double dx = q[0][0] - q[1][0], dy = q[0][1] - q[1][1];
      if (std::hypot(dx, dy) < 1e-3) return 1e300;
    }
    return testing::oracle_action(p, sys, nodes);
  };
  auto G = [&](const std::vector<double>& x) {
    std::vector<double> g(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      auto a = x, b = x;
      const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
      a[j] += h;
      b[j] -= h;
      g[j] = (F(a) - F(b)) / (2 * h);
    }
    return g;
  };
  double best = 1e300;
  for (std::size_t r = 0; r < restarts; ++r) {
    std::vector<double> x(e.size());
    std::size_t at = 0;
    for (std::size_t i = 0; i < e.n; ++i) {
      const double th = kPi * static_cast<double>(i) + rng.uniform(-0.3, 0.3);
      x[at++] = th;
      x[at++] = -R * std::sin(th) * rng.uniform(0.7, 1.3);
      x[at++] = R * std::cos(th) * rng.uniform(0.7, 1.3);
      for (std::size_t h = 1; h < K; ++h)
        for (int c = 0; c < 4; ++c) x[at++] = 0.02 * R * rng.uniform(-1, 1);
    }
    double fx = F(x);
    auto g = G(x);
    double step = 1e-4;
    for (int it = 0; it < 3000; ++it) {
      std::vector<double> xn(x.size());
      double t = step;
      double fn = 0;
      for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
        for (std::size_t j = 0; j < x.size(); ++j) xn[j] = x[j] - t * g[j];
        fn = F(xn);
        if (fn <= fx) break;
      }
      if (!(fn <= fx)) break;
      const auto gn = G(xn);
      double sy = 0, ss = 0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double s = xn[j] - x[j];
        sy += s * (gn[j] - g[j]);
        ss += s * s;
      }
      step = sy > 0 ? ss / sy : 1e-4;
      const double df = fx - fn;
      x = xn;
      g = gn;
      fx = fn;
      if (df < 1e-14 * std::abs(fx)) break;
    }
    best = std::min(best, fx);
  }
  return best;
}

}  // namespace

TEST_CASE("solve config validation") {
  SolveConfig c;
  CHECK_NOTHROW(c.validate(kTwo));
  CHECK(c.schedule_for(kTwo) == std::vector<double>{10, 1e2, 1e3, 1e4, 1e6});
  auto bad = [&](auto mutate) {
    SolveConfig b;
    mutate(b);
    CHECK_THROWS_AS(b.validate(kTwo), ValidationError);
  };
  bad([](SolveConfig& b) { b.radius = 0; });
  bad([](SolveConfig& b) { b.penalty_schedule = {10, 10, 1e6}; });
  bad([](SolveConfig& b) { b.penalty_schedule = {10, 1e3, 1e5}; });
  bad([](SolveConfig& b) { b.grad_tol = -1; });
  bad([](SolveConfig& b) { b.min_dist_guard = 0; });
  bad([](SolveConfig& b) { b.ls_backtrack = 1.0; });
  bad([](SolveConfig& b) { b.ls_max_steps = 0; });
  bad([](SolveConfig& b) { b.max_iters = 0; });
}

TEST_CASE("initial loop") {
  for (std::size_t n : {2u, 3u, 4u}) {
    const BodySystem sys(std::vector<double>(n, 1.0), 2, 3, 1);
    const double R = 1.4;
    const LoopPath Q = initial_loop(sys, R, 8, 0, 0.0);
    CHECK(endpoint_residual(Q, R) < 1e-15);
    CHECK(norm_squared(Q, sys) == doctest::Approx(4 * kPi * kPi * R * R * sys.total_mass()).epsilon(1e-13));
    CHECK(grid_min_distance(Q, NodeBasis(Q, QuadratureGrid(64))) > 0.0);
    const LoopPath P = initial_loop(sys, R, 8, 5);
    CHECK(endpoint_residual(P, R) < 1e-14);
    CHECK(P != Q);
    CHECK(P == initial_loop(sys, R, 8, 5));
  }
  // two bodies start antipodal: phases 1/2 and 1
  const LoopPath Q = initial_loop(kTwo, 1.0, 4, 0, 0.0);
  const auto q0 = evaluate(Q, 0.0);
  CHECK(q0(0, 0) == doctest::Approx(-1.0));
  CHECK(q0(1, 0) == doctest::Approx(1.0));
  CHECK(std::abs(q0(0, 0) + q0(1, 0)) < 1e-15);
  CHECK_THROWS_AS(initial_loop(kTwo, -1.0, 4, 0), DomainError);
}

TEST_CASE("matched ring radius") {
  const auto r = matched_ring_radius(kTwo);
  REQUIRE(r);
  CHECK(*r == doctest::Approx(0.5 * std::cbrt(0.5)).epsilon(1e-14));
  CHECK(!matched_ring_radius(BodySystem({1, 2}, 2, 3, 1)));
}

TEST_CASE("solve at the matched radius is a genuine critical point") {
  const double R = *matched_ring_radius(kTwo);
  const QuadratureGrid grid(128);
  const SolveReport r = minimize(kTwo, config_at(R, 16), grid);
  CHECK(r.converged);
  CHECK(r.projected_grad_norm <= r.grad_tol);
  CHECK(r.endpoint_res <= 1e-8 * R);
  CHECK(r.min_dist >= r.min_dist_guard);
  CHECK(r.virial_res <= 1e-6 * 2 * kTwo.energy());
  for (double l : r.multipliers) CHECK(std::abs(l) < 1e-6);
  CHECK(r.f_value > 0.5 * kTwo.energy() * r.kinetic);
  const auto id = directional_identity(r.path, kTwo, grid);
  CHECK(std::abs(id.closed_form) < 1e-6 * r.f_value);
}

TEST_CASE("solve at R=1") {
  const QuadratureGrid grid(64);
  const SolveConfig cfg = config_at(1.0, 8);
  const SolveReport r = minimize(kTwo, cfg, grid);
  CHECK(r.converged);
  CHECK(r.projected_grad_norm <= r.grad_tol);
  CHECK(r.endpoint_res <= 1e-8);
  CHECK(r.f_value > 0.5 * kTwo.energy() * r.kinetic);
  CHECK(r.f_value <= action(initial_loop(kTwo, 1.0, 8, cfg.seed), kTwo, grid).f);
  // away from the matched radius the endpoint constraint is active
  for (double l : r.multipliers) CHECK(std::abs(l) > 1.0);
  CHECK(r.virial_res > 0.1);

  // independent optimizer on the same discretization
  const double oracle = coarse_minimum(kTwo, 1.0, 8, 3, 99);
  CHECK(r.f_value <= oracle * (1 + 1e-9));
  CHECK(testing::rel_err(r.f_value, oracle) < 1e-4);
}

TEST_CASE("determinism") {
  const QuadratureGrid grid(64);
  const SolveReport a = minimize(kTwo, config_at(1.5, 8), grid);
  const SolveReport b = minimize(kTwo, config_at(1.5, 8), grid);
  CHECK(a.path == b.path);
  CHECK(a.f_value == b.f_value);
  CHECK(a.iters == b.iters);
  CHECK(a.multipliers == b.multipliers);
}

TEST_CASE("iterates respect the lower bound and descend within stages") {
  SolveConfig cfg = config_at(0.8, 8);
  cfg.record_history = true;
  const SolveReport r = minimize(kTwo, cfg, QuadratureGrid(64));
  REQUIRE(r.history.size() > 10);
  for (const auto& it : r.history) CHECK(it.f >= 0.5 * kTwo.energy() * it.kinetic);
  for (std::size_t k = 1; k < r.history.size(); ++k)
    if (r.history[k].stage == r.history[k - 1].stage)
      CHECK(r.history[k].objective <= r.history[k - 1].objective + 64 * 2.3e-16 * std::abs(r.history[k - 1].objective));
}

TEST_CASE("budget exhaustion reports the best iterate") {
  SolveConfig cfg = config_at(1.0, 8);
  cfg.max_iters = 3;
  try {
    minimize(kTwo, cfg, QuadratureGrid(64));
    FAIL("expected NonConvergence");
  } catch (const NonConvergence& e) {
    CHECK(!e.best().converged);
    CHECK(e.best().iters <= 3);
    CHECK(e.best().path.size() > 0);
  }
}

TEST_CASE("symmetric criticality") {
  const double R = *matched_ring_radius(kTwo);
  const QuadratureGrid grid(128);
  const SolveReport r = minimize(kTwo, config_at(R, 16), grid);
  const double s = symmetric_criticality_check(r, kTwo, grid);
  CHECK(s <= 10 * r.grad_tol);

  // also at an active-constraint minimizer
  const SolveReport r1 = minimize(kTwo, config_at(1.0, 16), grid);
  CHECK(symmetric_criticality_check(r1, kTwo, grid) <= 10 * r1.grad_tol);

  Rng rng(41);
  const LoopPath noise = testing::random_loop(rng, 2, 2, 16, 1.0, 0.1);
  CHECK(symmetric_criticality_residual(noise, kTwo, grid) > 1e2 * r.grad_tol);

  // even-harmonic perturbations are second order at the symmetric critical point
  const LoopPath full = r1.path.embedded_full();
  const LoopFunctional fn(kTwo, grid, full);
  LoopPath v = full.zeros_like();
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t h = 0; h < v.slots(); ++h)
      if (v.frequency(h) % 2 == 0)
        for (std::size_t k = 0; k < 2; ++k) {
          v.cos_coeff(i, h, k) = rng.uniform(-1, 1) / (1.0 + h);
          if (h > 0) v.sin_coeff(i, h, k) = rng.uniform(-1, 1) / (1.0 + h);
        }
  auto delta = [&](double eps) {
    LoopPath q = full;
    for (std::size_t j = 0; j < q.size(); ++j) q.coeffs()[j] += eps * v.coeffs()[j];
    return fn.value(q).f - fn.value(full).f;
  };
  const double d1 = delta(1e-4), d2 = delta(2e-4);
  const double C = std::abs(d2) / (4e-8);
  CHECK(std::abs(d1) <= 2 * C * 1e-8);
  CHECK(d2 / d1 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("result does not depend on the frame of the initial circle") {
  const BodySystem sys({1, 1, 1}, 3, 3.5, 1);
  SolveConfig cfg = config_at(1.0, 8);
  const QuadratureGrid grid(64);
  const SolveReport base = minimize(sys, cfg, grid);
  REQUIRE(base.converged);

  // rotate the start by an orthogonal matrix (Rodrigues, axis (1,2,2)/3, angle 0.7)
  const double a[3] = {1.0 / 3, 2.0 / 3, 2.0 / 3}, th = 0.7, c = std::cos(th), s = std::sin(th);
  double Q[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) Q[i][j] = (i == j ? c : 0.0) + (1 - c) * a[i] * a[j];
  Q[0][1] -= s * a[2]; Q[1][0] += s * a[2];
  Q[0][2] += s * a[1]; Q[2][0] -= s * a[1];
  Q[1][2] -= s * a[0]; Q[2][1] += s * a[0];
  const LoopPath start = initial_loop(sys, 1.0, 8, cfg.seed);
  LoopPath rotated = start;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t h = 0; h < start.slots(); ++h)
      for (std::size_t k = 0; k < 3; ++k) {
        double cc = 0, ss = 0;
        for (std::size_t l = 0; l < 3; ++l) {
          cc += Q[k][l] * start.cos_coeff(i, h, l);
          ss += Q[k][l] * start.sin_coeff(i, h, l);
        }
        rotated.cos_coeff(i, h, k) = cc;
        rotated.sin_coeff(i, h, k) = ss;
      }
  const SolveReport turned = minimize_from(sys, cfg, grid, rotated);
  REQUIRE(turned.converged);
  CHECK(testing::rel_err(turned.f_value, base.f_value) < 1e-8);
  CHECK(turned.min_dist == doctest::Approx(base.min_dist).epsilon(1e-5));
}
