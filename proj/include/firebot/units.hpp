#pragma once

#include <cmath>
#include <numbers>

namespace firebot {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kGravity = 9.81;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

constexpr double mm2m(double mm) { return mm * 1e-3; }
constexpr double m2mm(double m) { return m * 1e3; }

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

/// sign(x) with sign(0) = 0.
constexpr double sign(double x) { return (x > 0.0) - (x < 0.0); }

/// Linear ramp inside |x| < width, sign outside. width <= 0 gives sign(x).
inline double saturate(double x, double width) {
  if (width <= 0.0) return sign(x);
  const double r = x / width;
  return r > 1.0 ? 1.0 : (r < -1.0 ? -1.0 : r);
}

}  // namespace firebot
