#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "strongorbit/loop_space.hpp"
#include "strongorbit/model.hpp"

namespace testing {

using namespace strongorbit;

inline constexpr double kPi = std::numbers::pi;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * (static_cast<double>(gen_() >> 11) * 0x1.0p-53);
  }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }

 private:
  std::mt19937_64 gen_;
};

/// Bodies spread on a jittered lattice so pairwise distances stay O(1).
inline Configuration random_configuration(Rng& rng, std::size_t n, std::size_t d) {
  Configuration c(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) c(i, k) = (k == 0 ? 1.5 * static_cast<double>(i) : 0.0) + rng.uniform(-0.4, 0.4);
  return c;
}

/// A ring loop of radius r plus small random odd harmonics; collision-free by margin.
inline LoopPath random_loop(Rng& rng, std::size_t n, std::size_t d, std::size_t K, double r = 1.0,
                            double noise = 0.05) {
  LoopPath p(n, d, K);
  for (std::size_t i = 0; i < n; ++i) {
    const double phi = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n) + rng.uniform(-0.1, 0.1);
    p.cos_coeff(i, 0, 0) = r * std::cos(phi);
    p.cos_coeff(i, 0, 1) = r * std::sin(phi);
    p.sin_coeff(i, 0, 0) = -r * std::sin(phi);
    p.sin_coeff(i, 0, 1) = r * std::cos(phi);
    for (std::size_t h = 0; h < K; ++h)
      for (std::size_t k = 0; k < d; ++k) {
        p.cos_coeff(i, h, k) += noise * r * rng.uniform(-1, 1) / static_cast<double>(1 + h);
        p.sin_coeff(i, h, k) += noise * r * rng.uniform(-1, 1) / static_cast<double>(1 + h);
      }
  }
  return p;
}

/// Direct pair sum, independent of the library.
inline double oracle_potential(const std::vector<double>& m, double alpha, const std::vector<std::vector<double>>& x) {
  double v = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      double r2 = 0.0;
      for (std::size_t k = 0; k < x[i].size(); ++k) r2 += (x[i][k] - x[j][k]) * (x[i][k] - x[j][k]);
      v -= m[i] * m[j] / std::pow(std::sqrt(r2), alpha);
    }
  return v;
}

/// Positions by direct trig summation at loop time t.
inline std::vector<std::vector<double>> oracle_positions(const LoopPath& p, double t) {
  std::vector<std::vector<double>> x(p.n_bodies(), std::vector<double>(p.dim(), 0.0));
  for (std::size_t i = 0; i < p.n_bodies(); ++i)
    for (std::size_t h = 0; h < p.slots(); ++h) {
      const double w = 2.0 * kPi * p.frequency(h) * t;
      for (std::size_t k = 0; k < p.dim(); ++k) x[i][k] += p.cos_coeff(i, h, k) * std::cos(w) + p.sin_coeff(i, h, k) * std::sin(w);
    }
  return x;
}

/// f by plain Riemann sum on n nodes with coefficient-space Parseval kinetic term.
inline double oracle_action(const LoopPath& p, const BodySystem& sys, std::size_t n) {
  double kinetic = 0.0;
  for (std::size_t i = 0; i < p.n_bodies(); ++i)
    for (std::size_t h = 0; h < p.slots(); ++h) {
      const double w = 2.0 * kPi * p.frequency(h);
      for (std::size_t k = 0; k < p.dim(); ++k)
        kinetic += sys.mass(i) * w * w * 0.5 * (p.cos_coeff(i, h, k) * p.cos_coeff(i, h, k) + p.sin_coeff(i, h, k) * p.sin_coeff(i, h, k));
    }
  double excess = 0.0;
  for (std::size_t m = 0; m < n; ++m)
    excess += sys.energy() - oracle_potential(sys.masses(), sys.alpha(), oracle_positions(p, static_cast<double>(m) / n));
  return 0.5 * kinetic * excess / static_cast<double>(n);
}

/**
 * Two-body circular relative orbit, m = (m1, m2), separation rho, in the centre
 * of mass frame, as a single k = 1 harmonic: body i sits at radius r_i with
 * r_1 = rho m2/M, r_2 = rho m1/M, opposite phases.
 */
inline LoopPath circular_two_body(double m1, double m2, double rho, std::size_t K = 1) {
  LoopPath p(2, 2, K);
  const double M = m1 + m2;
  const double r[2] = {rho * m2 / M, rho * m1 / M};
  const double sgn[2] = {-1.0, 1.0};
  for (std::size_t i = 0; i < 2; ++i) {
    p.cos_coeff(i, 0, 0) = sgn[i] * r[i];
    p.sin_coeff(i, 0, 1) = sgn[i] * r[i];
  }
  return p;
}

/// Angular frequency of the circular two-body orbit: omega^2 = alpha k rho^-(alpha+2) / mu, k = m1 m2.
inline double circular_omega(double m1, double m2, double alpha, double rho) {
  const double mu = m1 * m2 / (m1 + m2);
  return std::sqrt(alpha * m1 * m2 * std::pow(rho, -(alpha + 2.0)) / mu);
}

/// Energy of that orbit: H = (alpha/2 - 1) k rho^-alpha.
inline double circular_energy(double m1, double m2, double alpha, double rho) {
  return (0.5 * alpha - 1.0) * m1 * m2 * std::pow(rho, -alpha);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing
