#include "strongorbit/model.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "strongorbit/errors.hpp"

namespace strongorbit {

BodySystem::BodySystem(std::vector<double> masses, std::size_t dim, double alpha, double energy,
                       double distance_floor)
    : masses_(std::move(masses)),
      dim_(dim),
      alpha_(alpha),
      energy_(energy),
      total_mass_(0.0),
      distance_floor_(distance_floor) {
  if (masses_.size() < 2) throw DomainError("at least two bodies are required (N>=2)");
  for (double m : masses_) {
    if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("masses must be strictly positive");
  }
  if (dim_ < 2) throw DomainError("spatial dimension must satisfy d>=2");
  if (!(alpha_ > 2.0) || !std::isfinite(alpha_))
    throw DomainError("alpha must satisfy the strong-force hypothesis α>2");
  if (!(energy_ > 0.0) || !std::isfinite(energy_))
    throw DomainError("energy must satisfy the positive-energy hypothesis H>0");
  if (!(distance_floor_ >= 0.0)) throw DomainError("distance floor must be non-negative");
  for (double m : masses_) total_mass_ += m;
}

BodySystem BodySystem::with_energy(double energy) const {
  return BodySystem(masses_, dim_, alpha_, energy, distance_floor_);
}

Configuration::Configuration(std::size_t n_bodies, std::size_t dim)
    : n_bodies_(n_bodies), dim_(dim), data_(n_bodies * dim, 0.0) {}

Configuration::Configuration(std::size_t n_bodies, std::size_t dim, std::vector<double> flat)
    : n_bodies_(n_bodies), dim_(dim), data_(std::move(flat)) {
  if (data_.size() != n_bodies_ * dim_) throw DomainError("configuration size mismatch");
}

double Configuration::norm() const { return std::sqrt(dot(*this)); }

double Configuration::dot(const Configuration& other) const {
  return std::inner_product(data_.begin(), data_.end(), other.data_.begin(), 0.0);
}

Configuration& Configuration::operator+=(const Configuration& other) {
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

Configuration& Configuration::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Configuration operator*(double s, Configuration c) {
  c *= s;
  return c;
}

Configuration operator+(Configuration a, const Configuration& b) {
  a += b;
  return a;
}

namespace {

double pair_distance(const Configuration& c, std::size_t i, std::size_t j) {
  auto xi = c.body(i);
  auto xj = c.body(j);
  double r2 = 0.0;
  for (std::size_t k = 0; k < xi.size(); ++k) {
    const double d = xi[k] - xj[k];
    r2 += d * d;
  }
  return std::sqrt(r2);
}

void check_shape(const BodySystem& sys, const Configuration& c) {
  if (c.n_bodies() != sys.n_bodies() || c.dim() != sys.dim())
    throw DomainError("configuration shape does not match the body system");
}

}  // namespace

double potential_and_gradient(const BodySystem& sys, const Configuration& c, Configuration& grad) {
  check_shape(sys, c);
  const std::size_t n = sys.n_bodies();
  const std::size_t d = sys.dim();
  const double alpha = sys.alpha();
  if (grad.n_bodies() != n || grad.dim() != d) grad = Configuration(n, d);
  std::fill(grad.flat().begin(), grad.flat().end(), 0.0);

  double v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = pair_distance(c, i, j);
      if (!(r > sys.distance_floor())) throw CollisionError(i, j, r);
      const double mm = sys.mass(i) * sys.mass(j);
      const double inv_ra = std::pow(r, -alpha);
      v -= mm * inv_ra;
      const double coef = alpha * mm * inv_ra / (r * r);
      auto xi = c.body(i);
      auto xj = c.body(j);
      auto gi = grad.body(i);
      auto gj = grad.body(j);
      for (std::size_t k = 0; k < d; ++k) {
        const double g = coef * (xi[k] - xj[k]);
        gi[k] += g;
        gj[k] -= g;
      }
    }
  }
  return v;
}

double potential(const BodySystem& sys, const Configuration& c) {
  check_shape(sys, c);
  const std::size_t n = sys.n_bodies();
  double v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = pair_distance(c, i, j);
      if (!(r > sys.distance_floor())) throw CollisionError(i, j, r);
      v -= sys.mass(i) * sys.mass(j) * std::pow(r, -sys.alpha());
    }
  }
  return v;
}

Configuration potential_gradient(const BodySystem& sys, const Configuration& c) {
  Configuration grad(sys.n_bodies(), sys.dim());
  potential_and_gradient(sys, c, grad);
  return grad;
}

VirialQuantity virial_quantity(const BodySystem& sys, const Configuration& c) {
  Configuration grad;
  const double v = potential_and_gradient(sys, c, grad);
  const double h = sys.energy();
  return {2.0 * (h - v) - grad.dot(c), 2.0 * h + (sys.alpha() - 2.0) * v};
}

double gordon_constant(const BodySystem& sys, std::size_t i, std::size_t j, double delta) {
  if (!(delta > 0.0)) throw DomainError("gordon_constant requires delta > 0");
  if (i == j || i >= sys.n_bodies() || j >= sys.n_bodies())
    throw DomainError("gordon_constant requires two distinct body indices");
  return delta * delta * pair_depth(sys, i, j, delta);
}

double pair_depth(const BodySystem& sys, std::size_t i, std::size_t j, double r) {
  return sys.mass(i) * sys.mass(j) * std::pow(r, -sys.alpha());
}

double min_pairwise_distance(const Configuration& c) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.n_bodies(); ++i)
    for (std::size_t j = i + 1; j < c.n_bodies(); ++j) best = std::min(best, pair_distance(c, i, j));
  return best;
}

double ordered_pair_mass_sum(const BodySystem& sys) {
  double s = 0.0;
  for (std::size_t i = 0; i < sys.n_bodies(); ++i)
    for (std::size_t j = 0; j < sys.n_bodies(); ++j)
      if (i != j) s += sys.mass(i) * sys.mass(j);
  return s;
}

}  // namespace strongorbit
