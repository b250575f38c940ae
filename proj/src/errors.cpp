#include "strongorbit/errors.hpp"

#include <sstream>

namespace strongorbit {

namespace {
std::string collision_message(std::size_t i, std::size_t j, double distance) {
  std::ostringstream os;
  os << "collision between bodies " << i << " and " << j << " (distance " << distance << ")";
  return os.str();
}
}  // namespace

CollisionError::CollisionError(std::size_t i, std::size_t j, double distance)
    : Error(collision_message(i, j, distance)), i_(i), j_(j), distance_(distance) {}

}  // namespace strongorbit
