#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace strongorbit {

/// Default hard floor on pairwise distances. Reaching it means a solver bug,
/// because the strong-force barrier keeps correct iterates away from collisions.
inline constexpr double kDefaultDistanceFloor = 1e-12;

/**
 * The physical problem: N point masses in R^d interacting through
 * V_ij(x) = -m_i m_j / |x|^alpha, at fixed total energy H.
 *
 * Construction validates N >= 2, positive masses, d >= 2, alpha > 2 and H > 0.
 */
class BodySystem {
 public:
  BodySystem(std::vector<double> masses, std::size_t dim, double alpha, double energy,
             double distance_floor = kDefaultDistanceFloor);

  std::size_t n_bodies() const { return masses_.size(); }
  std::size_t dim() const { return dim_; }
  double alpha() const { return alpha_; }
  double energy() const { return energy_; }
  double total_mass() const { return total_mass_; }
  double mass(std::size_t i) const { return masses_[i]; }
  const std::vector<double>& masses() const { return masses_; }
  double distance_floor() const { return distance_floor_; }

  /// Copy of this system with a different energy (used by negative controls).
  BodySystem with_energy(double energy) const;

  bool operator==(const BodySystem&) const = default;

 private:
  std::vector<double> masses_;
  std::size_t dim_;
  double alpha_;
  double energy_;
  double total_mass_;
  double distance_floor_;
};

/// N points in R^d stored body-major: x_i occupies [i*d, (i+1)*d).
class Configuration {
 public:
  Configuration() = default;
  Configuration(std::size_t n_bodies, std::size_t dim);
  Configuration(std::size_t n_bodies, std::size_t dim, std::vector<double> flat);

  std::size_t n_bodies() const { return n_bodies_; }
  std::size_t dim() const { return dim_; }

  std::span<double> body(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  std::span<const double> body(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  double& operator()(std::size_t i, std::size_t c) { return data_[i * dim_ + c]; }
  double operator()(std::size_t i, std::size_t c) const { return data_[i * dim_ + c]; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  /// Euclidean norm of the stacked vector (x_1, ..., x_N).
  double norm() const;
  /// Euclidean inner product of stacked vectors.
  double dot(const Configuration& other) const;

  Configuration& operator+=(const Configuration& other);
  Configuration& operator*=(double s);

  bool operator==(const Configuration&) const = default;

 private:
  std::size_t n_bodies_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

Configuration operator*(double s, Configuration c);
Configuration operator+(Configuration a, const Configuration& b);

/// Total potential V = sum_{i<j} -m_i m_j |x_i - x_j|^-alpha.
/// Throws CollisionError when any pair is at or below the distance floor.
double potential(const BodySystem& sys, const Configuration& c);

/// Gradient of V with respect to every body position.
Configuration potential_gradient(const BodySystem& sys, const Configuration& c);

/// V and its gradient in one pass over pairs. Returns V; writes the gradient into grad.
double potential_and_gradient(const BodySystem& sys, const Configuration& c, Configuration& grad);

/// The two algebraically equal forms of 2(H - V) - (grad V, x).
struct VirialQuantity {
  double direct;       ///< 2(H - V) - (grad V, x)
  double homogeneity;  ///< 2H + (alpha - 2) V
};

VirialQuantity virial_quantity(const BodySystem& sys, const Configuration& c);

/// C = m_i m_j delta^(2 - alpha): the constant with -V_ij(x) >= C/|x|^2 on 0 < |x| <= delta.
double gordon_constant(const BodySystem& sys, std::size_t i, std::size_t j, double delta);

/// -V_ij at separation r.
double pair_depth(const BodySystem& sys, std::size_t i, std::size_t j, double r);

/// Minimum over unordered pairs of |x_i - x_j|. Coincident bodies give 0.
double min_pairwise_distance(const Configuration& c);

/// Sum over ordered pairs i != j of m_i m_j.
double ordered_pair_mass_sum(const BodySystem& sys);

}  // namespace strongorbit
