#include "lgi/rng.hpp"

#include <cmath>
#include <numbers>

namespace lgi {

float Rng::normal() noexcept {
  // Shift u1 off zero so the logarithm stays finite.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  return static_cast<float>(std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2));
}

}  // namespace lgi
