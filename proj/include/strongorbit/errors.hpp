#pragma once

#include <stdexcept>
#include <string>

namespace strongorbit {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A pairwise distance fell to or below the hard floor.
class CollisionError : public Error {
 public:
  CollisionError(std::size_t i, std::size_t j, double distance);
  std::size_t first() const { return i_; }
  std::size_t second() const { return j_; }
  double distance() const { return distance_; }

 private:
  std::size_t i_;
  std::size_t j_;
  double distance_;
};

/// An argument is outside the domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A loop with zero kinetic content has no associated period.
class DegenerateLoop : public Error {
 public:
  using Error::Error;
};

/// The line search could not find a collision-free step above machine precision.
class CollisionGuardTripped : public Error {
 public:
  using Error::Error;
};

/// The symplectic integrator brought two bodies below the distance floor.
class IntegratorBlowup : public Error {
 public:
  using Error::Error;
};

/// Classification needs at least three continuation records.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// More than half of the radii in a sweep failed.
class SweepFailed : public Error {
 public:
  using Error::Error;
};

/// Input document or file does not satisfy its schema or invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace strongorbit
