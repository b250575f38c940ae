#include "strongorbit/action.hpp"

#include <cmath>
#include <limits>

#include "strongorbit/errors.hpp"

namespace strongorbit {

LoopFunctional::LoopFunctional(BodySystem sys, QuadratureGrid grid, const LoopPath& shape)
    : sys_(std::move(sys)), grid_(grid), basis_(shape, grid_), shape_(shape.zeros_like()) {
  if (shape.n_bodies() != sys_.n_bodies() || shape.dim() != sys_.dim())
    throw DomainError("loop shape does not match the body system");
  grid_.require_resolves(shape);
}

void LoopFunctional::check(const LoopPath& path) const {
  if (!path.same_shape(shape_)) throw DomainError("loop shape differs from the functional's shape");
}

double LoopFunctional::mean_potential(const LoopPath& path) const {
  const auto pos = sample_positions(path, basis_);
  std::vector<double> vals(pos.size());
  for (std::size_t m = 0; m < pos.size(); ++m) vals[m] = potential(sys_, pos[m]);
  return pairwise_sum(vals) * grid_.weight();
}

ActionValue LoopFunctional::value(const LoopPath& path) const {
  check(path);
  ActionValue out;
  out.kinetic = norm_squared(path, sys_);
  if (out.kinetic == 0.0) {
    // A motionless loop has f = 0 from the product form, even when it sits on a
    // collision (the odd basis forces q = 0 there).
    try {
      out.mean_excess = sys_.energy() - mean_potential(path);
    } catch (const CollisionError&) {
      out.mean_excess = std::numeric_limits<double>::infinity();
    }
    out.f = 0.0;
    return out;
  }
  out.mean_excess = sys_.energy() - mean_potential(path);
  out.f = 0.5 * out.kinetic * out.mean_excess;
  return out;
}

ActionValue LoopFunctional::value_and_gradient(const LoopPath& path, std::vector<double>& grad) const {
  check(path);
  const std::size_t n_nodes = basis_.nodes();
  const std::size_t n = path.n_bodies();
  const std::size_t d = path.dim();
  const std::size_t slots = path.slots();

  const auto pos = sample_positions(path, basis_);
  std::vector<double> vals(n_nodes);
  std::vector<Configuration> gv(n_nodes, Configuration(n, d));
  for (std::size_t m = 0; m < n_nodes; ++m) vals[m] = potential_and_gradient(sys_, pos[m], gv[m]);

  ActionValue out;
  out.kinetic = norm_squared(path, sys_);
  out.mean_excess = sys_.energy() - pairwise_sum(vals) * grid_.weight();
  out.f = 0.5 * out.kinetic * out.mean_excess;

  // d(mean_excess)/dc = -(1/n_t) sum_m (grad V(q_m), dq_m/dc); reduced in the same
  // pairwise order as the value so the result is reproducible.
  grad.assign(path.size(), 0.0);
  std::vector<double> column(n_nodes);
  const double w = grid_.weight();
  for (std::size_t i = 0; i < n; ++i) {
    const double mass = sys_.mass(i);
    for (std::size_t h = 0; h < slots; ++h) {
      const double om = basis_.omega(h);
      const double kin_diag = mass * om * om;
      for (std::size_t c = 0; c < d; ++c) {
        for (int part = 0; part < 2; ++part) {
          for (std::size_t m = 0; m < n_nodes; ++m) {
            const double phi = part == 0 ? basis_.cos(m, h) : basis_.sin(m, h);
            column[m] = gv[m](i, c) * phi;
          }
          const double d_excess = -pairwise_sum(column) * w;
          const std::size_t idx = path.index(i, h, part, c);
          const double d_kinetic = kin_diag * path.coeffs()[idx];
          grad[idx] = 0.5 * d_kinetic * out.mean_excess + 0.5 * out.kinetic * d_excess;
        }
      }
    }
  }
  double g2 = 0.0;
  for (double g : grad) g2 += g * g;
  out.grad_norm = std::sqrt(g2);
  return out;
}

DirectionalIdentity LoopFunctional::directional_identity(const LoopPath& path) const {
  check(path);
  if (norm_squared(path, sys_) == 0.0) return {0.0, 0.0};
  std::vector<double> grad;
  const ActionValue av = value_and_gradient(path, grad);
  double inner = 0.0;
  for (std::size_t k = 0; k < grad.size(); ++k) inner += grad[k] * path.coeffs()[k];

  const auto pos = sample_positions(path, basis_);
  std::vector<double> vals(pos.size());
  Configuration g;
  for (std::size_t m = 0; m < pos.size(); ++m) {
    const double v = potential_and_gradient(sys_, pos[m], g);
    vals[m] = sys_.energy() - v - 0.5 * g.dot(pos[m]);
  }
  return {inner, av.kinetic * pairwise_sum(vals) * grid_.weight()};
}

double LoopFunctional::virial_integral(const LoopPath& path) const {
  check(path);
  const auto pos = sample_positions(path, basis_);
  std::vector<double> vals(pos.size());
  for (std::size_t m = 0; m < pos.size(); ++m)
    vals[m] = 2.0 * sys_.energy() + (sys_.alpha() - 2.0) * potential(sys_, pos[m]);
  return pairwise_sum(vals) * grid_.weight();
}

ActionValue action(const LoopPath& path, const BodySystem& sys, const QuadratureGrid& grid) {
  return LoopFunctional(sys, grid, path).value(path);
}

LoopPath action_gradient(const LoopPath& path, const BodySystem& sys, const QuadratureGrid& grid) {
  std::vector<double> grad;
  LoopFunctional(sys, grid, path).value_and_gradient(path, grad);
  LoopPath out = path.zeros_like();
  std::copy(grad.begin(), grad.end(), out.coeffs().begin());
  return out;
}

DirectionalIdentity directional_identity(const LoopPath& path, const BodySystem& sys,
                                         const QuadratureGrid& grid) {
  return LoopFunctional(sys, grid, path).directional_identity(path);
}

}  // namespace strongorbit
