#pragma once

#include <vector>

#include "strongorbit/loop_space.hpp"
#include "strongorbit/model.hpp"

namespace strongorbit {

/// The fixed-energy functional f(q) = 1/2 ||q||^2 int_0^1 (H - V(q(t))) dt and its parts.
struct ActionValue {
  double f = 0.0;
  double kinetic = 0.0;      ///< ||q||^2
  double mean_excess = 0.0;  ///< int (H - V) dt
  double grad_norm = 0.0;    ///< Euclidean norm of the coefficient gradient (0 when not computed)
};

/// Both evaluations of (f'(q), q).
struct DirectionalIdentity {
  double inner_product;  ///< coefficient-space (grad f, q)
  double closed_form;    ///< ||q||^2 int (H - V - 1/2 (grad V, q)) dt
};

/**
 * Evaluates f and its coefficient gradient for loops of one fixed shape on one
 * quadrature grid. All integrals share the grid, so the gradient is the exact
 * gradient of the discretized functional.
 */
class LoopFunctional {
 public:
  LoopFunctional(BodySystem sys, QuadratureGrid grid, const LoopPath& shape);

  const BodySystem& system() const { return sys_; }
  const QuadratureGrid& grid() const { return grid_; }
  const NodeBasis& basis() const { return basis_; }

  ActionValue value(const LoopPath& path) const;
  /// Value plus gradient written into grad (resized to path.size()).
  ActionValue value_and_gradient(const LoopPath& path, std::vector<double>& grad) const;
  DirectionalIdentity directional_identity(const LoopPath& path) const;

  /// int_0^1 (2H + (alpha - 2) V(q(t))) dt.
  double virial_integral(const LoopPath& path) const;
  double min_distance(const LoopPath& path) const { return grid_min_distance(path, basis_); }

 private:
  void check(const LoopPath& path) const;
  double mean_potential(const LoopPath& path) const;

  BodySystem sys_;
  QuadratureGrid grid_;
  NodeBasis basis_;
  LoopPath shape_;
};

ActionValue action(const LoopPath& path, const BodySystem& sys, const QuadratureGrid& grid);

/// Gradient of f with respect to every coefficient, returned in the loop's own layout.
LoopPath action_gradient(const LoopPath& path, const BodySystem& sys, const QuadratureGrid& grid);

DirectionalIdentity directional_identity(const LoopPath& path, const BodySystem& sys,
                                         const QuadratureGrid& grid);

}  // namespace strongorbit
