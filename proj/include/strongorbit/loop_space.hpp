#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "strongorbit/model.hpp"

namespace strongorbit {

/// Which Fourier frequencies a loop carries.
enum class Basis {
  odd,   ///< k = 1, 3, ..., 2K-1: the antiperiodic subspace q(t + 1/2) = -q(t)
  full,  ///< k = 0, 1, ..., 2K-1: every period-1 loop up to the same top frequency
};

/**
 * A closed loop q: R/Z -> (R^d)^N given by a truncated trigonometric series
 *
 *   q_i(t) = sum_k a_ik cos(2 pi k t) + b_ik sin(2 pi k t).
 *
 * With the odd basis there is no constant term and q(t + 1/2) = -q(t) holds by
 * construction, so the only loop constraint left to enforce is |q_i(0)| = R.
 *
 * Coefficients are stored flat in the order [body][slot][cos|sin][component],
 * the same nesting as the JSON document.
 */
class LoopPath {
 public:
  LoopPath() = default;
  LoopPath(std::size_t n_bodies, std::size_t dim, std::size_t harmonics, Basis basis = Basis::odd);

  std::size_t n_bodies() const { return n_bodies_; }
  std::size_t dim() const { return dim_; }
  /// Truncation count K. The highest frequency is 2K-1 in either basis.
  std::size_t harmonics() const { return harmonics_; }
  Basis basis() const { return basis_; }
  /// Number of frequency slots: K for the odd basis, 2K for the full basis.
  std::size_t slots() const { return basis_ == Basis::odd ? harmonics_ : 2 * harmonics_; }
  /// Frequency carried by slot h.
  int frequency(std::size_t h) const {
    return basis_ == Basis::odd ? static_cast<int>(2 * h + 1) : static_cast<int>(h);
  }
  int max_frequency() const { return static_cast<int>(2 * harmonics_) - 1; }

  std::size_t index(std::size_t body, std::size_t slot, int sin_part, std::size_t comp) const {
    return ((body * slots() + slot) * 2 + static_cast<std::size_t>(sin_part)) * dim_ + comp;
  }
  double& cos_coeff(std::size_t body, std::size_t slot, std::size_t comp) {
    return coeffs_[index(body, slot, 0, comp)];
  }
  double& sin_coeff(std::size_t body, std::size_t slot, std::size_t comp) {
    return coeffs_[index(body, slot, 1, comp)];
  }
  double cos_coeff(std::size_t body, std::size_t slot, std::size_t comp) const {
    return coeffs_[index(body, slot, 0, comp)];
  }
  double sin_coeff(std::size_t body, std::size_t slot, std::size_t comp) const {
    return coeffs_[index(body, slot, 1, comp)];
  }

  std::span<double> coeffs() { return coeffs_; }
  std::span<const double> coeffs() const { return coeffs_; }
  std::size_t size() const { return coeffs_.size(); }

  /// Copy with every coefficient multiplied by s.
  LoopPath scaled(double s) const;
  /// Re-express an odd-basis loop in the full basis (even slots zero).
  LoopPath embedded_full() const;
  /// Same shape, all coefficients zero.
  LoopPath zeros_like() const;

  bool same_shape(const LoopPath& other) const;
  bool operator==(const LoopPath&) const = default;

 private:
  std::size_t n_bodies_ = 0;
  std::size_t dim_ = 0;
  std::size_t harmonics_ = 0;
  Basis basis_ = Basis::odd;
  std::vector<double> coeffs_;
};

/// Uniform quadrature on [0, 1): nodes m / n_t, weight 1 / n_t each.
class QuadratureGrid {
 public:
  explicit QuadratureGrid(std::size_t n_nodes);

  std::size_t size() const { return n_; }
  double node(std::size_t m) const { return static_cast<double>(m) / static_cast<double>(n_); }
  double weight() const { return 1.0 / static_cast<double>(n_); }

  /// True when n_t >= 4 (2K - 1), so products of represented harmonics integrate exactly.
  bool resolves(const LoopPath& path) const;
  /// Throws DomainError unless resolves(path).
  void require_resolves(const LoopPath& path) const;

  bool operator==(const QuadratureGrid&) const = default;

 private:
  std::size_t n_;
};

/**
 * cos/sin of 2 pi k t_m for every slot of a loop shape and every grid node.
 *
 * Values come from one table of the unit circle at multiples of 2 pi / n_t whose
 * second half is the exact negation of the first, so node sums inherit the exact
 * antiperiodic symmetry.
 */
class NodeBasis {
 public:
  NodeBasis(const LoopPath& shape, const QuadratureGrid& grid);

  std::size_t nodes() const { return n_nodes_; }
  std::size_t slots() const { return slots_; }
  double cos(std::size_t m, std::size_t h) const { return cos_[m * slots_ + h]; }
  double sin(std::size_t m, std::size_t h) const { return sin_[m * slots_ + h]; }
  double omega(std::size_t h) const { return omega_[h]; }

 private:
  std::size_t n_nodes_;
  std::size_t slots_;
  std::vector<double> cos_;
  std::vector<double> sin_;
  std::vector<double> omega_;
};

/// Positions at loop time t (reduced mod 1).
Configuration evaluate(const LoopPath& path, double t);
/// Termwise derivative dq/dt at loop time t.
Configuration velocity(const LoopPath& path, double t);
/// Termwise second derivative at loop time t.
Configuration acceleration(const LoopPath& path, double t);

/// Positions, velocities or accelerations at every grid node.
std::vector<Configuration> sample_positions(const LoopPath& path, const NodeBasis& basis);
std::vector<Configuration> sample_velocities(const LoopPath& path, const NodeBasis& basis);
std::vector<Configuration> sample_accelerations(const LoopPath& path, const NodeBasis& basis);

/// ||q||^2 = int_0^1 sum_i m_i |q_i'|^2 dt in closed form (Parseval).
double norm_squared(const LoopPath& path, const BodySystem& sys);
/// The same integral by grid quadrature of sampled velocities.
double norm_squared_quadrature(const LoopPath& path, const BodySystem& sys, const QuadratureGrid& grid);

/// q_i(0) for body i.
std::vector<double> start_point(const LoopPath& path, std::size_t body);
/// max_i | |q_i(0)| - R |.
double endpoint_residual(const LoopPath& path, double radius);

/// Grid quadrature (1/n_t) sum_m integrand(q(t_m)) with a fixed pairwise reduction order.
double integrate_over_loop(const LoopPath& path, const QuadratureGrid& grid,
                           const std::function<double(const Configuration&)>& integrand);

/// Minimum pairwise distance over all grid nodes.
double grid_min_distance(const LoopPath& path, const NodeBasis& basis);

/// Pairwise (recursive halving) summation. Splitting at n/2 first makes sums of
/// antiperiodic samples cancel exactly.
double pairwise_sum(std::span<const double> values);

}  // namespace strongorbit
