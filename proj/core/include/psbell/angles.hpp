#pragma once

#include <cmath>
#include <numbers>

namespace psbell {

inline constexpr double pi = std::numbers::pi;

constexpr double deg_to_rad(double deg) noexcept { return deg * (pi / 180.0); }
constexpr double rad_to_deg(double rad) noexcept { return rad * (180.0 / pi); }

// Wraps into (-pi, pi].
inline double wrap_phase(double phase) noexcept {
  double wrapped = std::remainder(phase, 2.0 * pi);
  if (wrapped <= -pi) wrapped += 2.0 * pi;
  return wrapped;
}

}  // namespace psbell
