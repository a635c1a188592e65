#pragma once

#include <cmath>
#include <numbers>

#include "geonum/error.hpp"

namespace geonum {

/// pi^(n/2) / Gamma(n/2 + 1)
inline double unit_ball_volume(int n) {
  if (n < 1) throw ValidationError("ball volume: dimension must be >= 1");
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

inline double ball_volume(int n, double r) {
  if (!(r >= 0.0)) throw ValidationError("ball volume: radius must be >= 0");
  return unit_ball_volume(n) * std::pow(r, n);
}

/// Radius of the centered ball of volume `a`: the spherical symmetrization
/// of any set of measure a.
inline double symmetrization_radius(double a, int n) {
  if (!(a > 0.0)) throw ValidationError("symmetrization_radius: volume must be > 0");
  return std::pow(a / unit_ball_volume(n), 1.0 / n);
}

}  // namespace geonum
