#include "strongorbit/loop_space.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "strongorbit/errors.hpp"

namespace strongorbit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class Derivative { none, first, second };

// Reduces t to [0, 1). For the odd basis the half period is folded as well:
// q(r) = -q(r - 1/2) for r >= 1/2, and r - 1/2 is exact there.
struct ReducedTime {
  double s;
  double sign;
};

ReducedTime reduce(double t, Basis basis) {
  double r = t - std::floor(t);
  if (r >= 1.0) r = 0.0;
  if (basis == Basis::odd && r >= 0.5) return {r - 0.5, -1.0};
  return {r, 1.0};
}

Configuration eval_series(const LoopPath& path, double t, Derivative order) {
  const auto [s, sign] = reduce(t, path.basis());
  Configuration out(path.n_bodies(), path.dim());
  const std::size_t d = path.dim();
  for (std::size_t h = 0; h < path.slots(); ++h) {
    const double k = path.frequency(h);
    double phase = k * s;
    phase -= std::floor(phase);
    const double c = std::cos(kTwoPi * phase);
    const double sn = std::sin(kTwoPi * phase);
    const double w = kTwoPi * k;
    double ca = 0.0;
    double cb = 0.0;
    switch (order) {
      case Derivative::none:
        ca = c;
        cb = sn;
        break;
      case Derivative::first:
        ca = -w * sn;
        cb = w * c;
        break;
      case Derivative::second:
        ca = -w * w * c;
        cb = -w * w * sn;
        break;
    }
    for (std::size_t i = 0; i < path.n_bodies(); ++i) {
      auto x = out.body(i);
      for (std::size_t comp = 0; comp < d; ++comp)
        x[comp] += ca * path.cos_coeff(i, h, comp) + cb * path.sin_coeff(i, h, comp);
    }
  }
  if (sign < 0.0) out *= -1.0;
  return out;
}

std::vector<Configuration> sample_series(const LoopPath& path, const NodeBasis& basis,
                                         Derivative order) {
  if (basis.slots() != path.slots()) throw DomainError("node basis does not match loop shape");
  std::vector<Configuration> out(basis.nodes(), Configuration(path.n_bodies(), path.dim()));
  const std::size_t d = path.dim();
  for (std::size_t m = 0; m < basis.nodes(); ++m) {
    Configuration& x = out[m];
    for (std::size_t i = 0; i < path.n_bodies(); ++i) {
      auto xi = x.body(i);
      for (std::size_t h = 0; h < path.slots(); ++h) {
        const double c = basis.cos(m, h);
        const double sn = basis.sin(m, h);
        const double w = basis.omega(h);
        double ca = c;
        double cb = sn;
        if (order == Derivative::first) {
          ca = -w * sn;
          cb = w * c;
        } else if (order == Derivative::second) {
          ca = -w * w * c;
          cb = -w * w * sn;
        }
        for (std::size_t comp = 0; comp < d; ++comp)
          xi[comp] += ca * path.cos_coeff(i, h, comp) + cb * path.sin_coeff(i, h, comp);
      }
    }
  }
  return out;
}

}  // namespace

LoopPath::LoopPath(std::size_t n_bodies, std::size_t dim, std::size_t harmonics, Basis basis)
    : n_bodies_(n_bodies), dim_(dim), harmonics_(harmonics), basis_(basis) {
  if (harmonics_ == 0) throw DomainError("a loop needs at least one harmonic");
  coeffs_.assign(n_bodies_ * slots() * 2 * dim_, 0.0);
}

LoopPath LoopPath::scaled(double s) const {
  LoopPath out = *this;
  for (double& c : out.coeffs_) c *= s;
  return out;
}

LoopPath LoopPath::embedded_full() const {
  if (basis_ == Basis::full) return *this;
  LoopPath out(n_bodies_, dim_, harmonics_, Basis::full);
  for (std::size_t i = 0; i < n_bodies_; ++i)
    for (std::size_t h = 0; h < slots(); ++h) {
      const auto full_slot = static_cast<std::size_t>(frequency(h));
      for (std::size_t c = 0; c < dim_; ++c) {
        out.cos_coeff(i, full_slot, c) = cos_coeff(i, h, c);
        out.sin_coeff(i, full_slot, c) = sin_coeff(i, h, c);
      }
    }
  return out;
}

LoopPath LoopPath::zeros_like() const { return LoopPath(n_bodies_, dim_, harmonics_, basis_); }

bool LoopPath::same_shape(const LoopPath& other) const {
  return n_bodies_ == other.n_bodies_ && dim_ == other.dim_ && harmonics_ == other.harmonics_ &&
         basis_ == other.basis_;
}

QuadratureGrid::QuadratureGrid(std::size_t n_nodes) : n_(n_nodes) {
  if (n_ < 4 || n_ % 2 != 0) throw DomainError("quadrature grid needs an even node count >= 4");
}

bool QuadratureGrid::resolves(const LoopPath& path) const {
  return n_ >= 4 * static_cast<std::size_t>(path.max_frequency());
}

void QuadratureGrid::require_resolves(const LoopPath& path) const {
  if (!resolves(path))
    throw DomainError("quadrature grid too coarse: need n_t >= 4(2K-1) = " +
                      std::to_string(4 * path.max_frequency()));
}

NodeBasis::NodeBasis(const LoopPath& shape, const QuadratureGrid& grid)
    : n_nodes_(grid.size()), slots_(shape.slots()) {
  const std::size_t n = n_nodes_;
  const std::size_t half = n / 2;
  std::vector<double> circle_cos(n);
  std::vector<double> circle_sin(n);
  for (std::size_t j = 0; j < half; ++j) {
    const double angle = kTwoPi * static_cast<double>(j) / static_cast<double>(n);
    circle_cos[j] = std::cos(angle);
    circle_sin[j] = std::sin(angle);
    circle_cos[j + half] = -circle_cos[j];
    circle_sin[j + half] = -circle_sin[j];
  }
  cos_.resize(n * slots_);
  sin_.resize(n * slots_);
  omega_.resize(slots_);
  for (std::size_t h = 0; h < slots_; ++h) {
    const auto k = static_cast<std::size_t>(shape.frequency(h));
    omega_[h] = kTwoPi * static_cast<double>(k);
    for (std::size_t m = 0; m < n; ++m) {
      const std::size_t j = (k * m) % n;
      cos_[m * slots_ + h] = circle_cos[j];
      sin_[m * slots_ + h] = circle_sin[j];
    }
  }
}

Configuration evaluate(const LoopPath& path, double t) { return eval_series(path, t, Derivative::none); }
Configuration velocity(const LoopPath& path, double t) { return eval_series(path, t, Derivative::first); }
Configuration acceleration(const LoopPath& path, double t) {
  return eval_series(path, t, Derivative::second);
}

std::vector<Configuration> sample_positions(const LoopPath& path, const NodeBasis& basis) {
  return sample_series(path, basis, Derivative::none);
}
std::vector<Configuration> sample_velocities(const LoopPath& path, const NodeBasis& basis) {
  return sample_series(path, basis, Derivative::first);
}
std::vector<Configuration> sample_accelerations(const LoopPath& path, const NodeBasis& basis) {
  return sample_series(path, basis, Derivative::second);
}

double norm_squared(const LoopPath& path, const BodySystem& sys) {
  double total = 0.0;
  for (std::size_t i = 0; i < path.n_bodies(); ++i) {
    double body = 0.0;
    for (std::size_t h = 0; h < path.slots(); ++h) {
      const double w = kTwoPi * path.frequency(h);
      double amp = 0.0;
      for (std::size_t c = 0; c < path.dim(); ++c) {
        const double a = path.cos_coeff(i, h, c);
        const double b = path.sin_coeff(i, h, c);
        amp += a * a + b * b;
      }
      body += 0.5 * w * w * amp;
    }
    total += sys.mass(i) * body;
  }
  return total;
}

double norm_squared_quadrature(const LoopPath& path, const BodySystem& sys, const QuadratureGrid& grid) {
  const NodeBasis basis(path, grid);
  const auto vel = sample_velocities(path, basis);
  std::vector<double> values(vel.size());
  for (std::size_t m = 0; m < vel.size(); ++m) {
    double s = 0.0;
    for (std::size_t i = 0; i < path.n_bodies(); ++i) {
      double v2 = 0.0;
      for (double v : vel[m].body(i)) v2 += v * v;
      s += sys.mass(i) * v2;
    }
    values[m] = s;
  }
  return pairwise_sum(values) * grid.weight();
}

std::vector<double> start_point(const LoopPath& path, std::size_t body) {
  std::vector<double> x(path.dim(), 0.0);
  for (std::size_t h = 0; h < path.slots(); ++h)
    for (std::size_t c = 0; c < path.dim(); ++c) x[c] += path.cos_coeff(body, h, c);
  return x;
}

double endpoint_residual(const LoopPath& path, double radius) {
  double worst = 0.0;
  for (std::size_t i = 0; i < path.n_bodies(); ++i) {
    const auto x = start_point(path, i);
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    worst = std::max(worst, std::abs(std::sqrt(r2) - radius));
  }
  return worst;
}

double integrate_over_loop(const LoopPath& path, const QuadratureGrid& grid,
                           const std::function<double(const Configuration&)>& integrand) {
  const NodeBasis basis(path, grid);
  const auto pos = sample_positions(path, basis);
  std::vector<double> values(pos.size());
  for (std::size_t m = 0; m < pos.size(); ++m) values[m] = integrand(pos[m]);
  return pairwise_sum(values) * grid.weight();
}

double grid_min_distance(const LoopPath& path, const NodeBasis& basis) {
  const auto pos = sample_positions(path, basis);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& x : pos) best = std::min(best, min_pairwise_distance(x));
  return best;
}

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n <= 4) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace strongorbit
