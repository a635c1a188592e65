#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geonum/ball.hpp"
#include "geonum/error.hpp"
#include "geonum/forms.hpp"

namespace geonum {

/// Norm comparisons against a radius T accept ||x|| <= T + 1e-9 (closed ball).
inline constexpr double kBoundaryTolerance = 1e-9;

/// Measurable set A in R^n given by a membership predicate.
///
/// `contains` must be false for every x with ||x|| > bounding_radius.
/// `gauge`, when set, is the Minkowski functional of a star body:
/// x lies in t*A exactly when gauge(x) <= t. Dilation sweeps use it to test
/// all dilates with one evaluation per point.
struct Region {
  int dim = 0;
  std::function<bool(const Vector&)> contains;
  double bounding_radius = 0.0;
  std::optional<double> volume_hint;
  std::function<double(const Vector&)> gauge;
  std::string kind;

  /// Centered Euclidean ball B(0, T).
  static Region ball(int n, double radius) {
    if (n < 1) throw ValidationError("ball region: dimension must be >= 1");
    if (!(radius > 0.0)) throw ValidationError("ball region: radius must be > 0");
    const double limit2 = (radius + kBoundaryTolerance) * (radius + kBoundaryTolerance);
    Region r;
    r.dim = n;
    r.contains = [limit2](const Vector& x) { return x.squaredNorm() <= limit2; };
    r.bounding_radius = radius;
    r.volume_hint = ball_volume(n, radius);
    r.gauge = [radius](const Vector& x) { return x.norm() / radius; };
    r.kind = "ball";
    return r;
  }

  /// Q^{-1}(a, b) intersected with B(0, T). Value comparisons are strict.
  static Region quad_shell(const QuadraticForm& form, double a, double b, double radius) {
    if (!(a < b)) throw ValidationError("quad shell: need a < b");
    if (!(radius > 0.0)) throw ValidationError("quad shell: radius must be > 0");
    const double limit2 = (radius + kBoundaryTolerance) * (radius + kBoundaryTolerance);
    Region r;
    r.dim = form.dim();
    r.contains = [form, a, b, limit2](const Vector& x) {
      if (x.squaredNorm() > limit2) return false;
      const double value = evaluate(form, x);
      return a < value && value < b;
    };
    r.bounding_radius = radius;
    r.kind = "shell";
    return r;
  }

  /// Axis-aligned closed box with the given side lengths.
  static Region box(std::vector<double> sides, std::optional<Vector> center = std::nullopt) {
    const int n = static_cast<int>(sides.size());
    if (n < 1) throw ValidationError("box region: need at least one side");
    Vector c = center.value_or(Vector::Zero(n));
    if (c.size() != n) throw ValidationError("box region: center dimension mismatch");
    double volume = 1.0;
    Vector half(n);
    for (int i = 0; i < n; ++i) {
      if (!(sides[i] > 0.0)) throw ValidationError("box region: side lengths must be > 0");
      volume *= sides[i];
      half(i) = 0.5 * sides[i];
    }
    Region r;
    r.dim = n;
    r.contains = [c, half](const Vector& x) {
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (std::abs(x(i) - c(i)) > half(i)) return false;
      }
      return true;
    };
    r.bounding_radius = c.norm() + half.norm();
    r.volume_hint = volume;
    if (c.isZero(0.0)) {
      r.gauge = [half](const Vector& x) {
        double g = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) g = std::max(g, std::abs(x(i)) / half(i));
        return g;
      };
    }
    r.kind = "box";
    return r;
  }

  /// Centered cube [-s/2, s/2]^n of the given volume.
  static Region cube(int n, double volume = 1.0) {
    if (!(volume > 0.0)) throw ValidationError("cube region: volume must be > 0");
    return box(std::vector<double>(n, std::pow(volume, 1.0 / n)));
  }

  /// t * base.
  static Region dilate(const Region& base, double t) {
    if (!(t > 0.0)) throw ValidationError("dilate: factor must be > 0");
    Region r;
    r.dim = base.dim;
    r.contains = [inner = base.contains, t](const Vector& x) { return inner(x / t); };
    r.bounding_radius = t * base.bounding_radius;
    if (base.volume_hint) r.volume_hint = *base.volume_hint * std::pow(t, base.dim);
    if (base.gauge) r.gauge = [g = base.gauge, t](const Vector& x) { return g(x) / t; };
    r.kind = "dilate(" + base.kind + ")";
    return r;
  }

  /// A region containing nothing, of volume 0.
  static Region empty(int n, double radius = 1.0) {
    Region r;
    r.dim = n;
    r.contains = [](const Vector&) { return false; };
    r.bounding_radius = radius;
    r.volume_hint = 0.0;
    r.kind = "empty";
    return r;
  }

  static Region custom(int n, double radius, std::function<bool(const Vector&)> predicate,
                       std::optional<double> volume = std::nullopt) {
    if (!(radius > 0.0)) throw ValidationError("region: bounding radius must be > 0");
    Region r;
    r.dim = n;
    r.contains = std::move(predicate);
    r.bounding_radius = radius;
    r.volume_hint = volume;
    r.kind = "custom";
    return r;
  }
};

}  // namespace geonum
