#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "geonum/ball.hpp"
#include "geonum/error.hpp"
#include "geonum/forms.hpp"
#include "geonum/lattice.hpp"
#include "geonum/region.hpp"

namespace geonum {

inline constexpr double kMaxPredictedPoints = 1e8;
inline constexpr double kMaxRadiusRatio = 1e7;

/// One enumerated lattice point. `coords` are integer coordinates with
/// respect to the lattice's stored basis; the references are valid only
/// for the duration of the visitor call.
struct LatticePoint {
  const Vector& vector;
  std::span<const std::int64_t> coords;
  double norm2;
};

/// Enumerates lattice points in balls and spherical shells.
///
/// Construction LLL-reduces the basis once; each query then runs a
/// depth-first branch and bound over integer coordinates of the reduced
/// basis with exact interval pruning on the Gram-Schmidt (QR) coordinates.
/// Points come out in lexicographic order of reduced coordinates, last
/// coordinate outermost. No heuristic pruning: output is exact up to the
/// 1e-9 closed-ball tolerance.
class PointEnumerator {
 public:
  explicit PointEnumerator(const Lattice& lattice)
      : reduction_(lll_reduce_with_transform(lattice)), dim_(lattice.dim()) {
    const Matrix& b = reduction_.lattice.basis();
    Eigen::HouseholderQR<Matrix> qr(b);
    r_ = qr.matrixQR().triangularView<Eigen::Upper>();
    shortest_ = b.colwise().norm().minCoeff();
    for (int i = 0; i < dim_; ++i) {
      if (!(std::abs(r_(i, i)) > 1e-300)) {
        throw ComputationError("enumerate: degenerate basis after reduction");
      }
    }
  }

  int dim() const { return dim_; }
  const LllReduction& reduction() const { return reduction_; }
  /// Shortest reduced basis vector; an upper estimate of the first minimum.
  double shortest_basis_norm() const { return shortest_; }

  /// Predicted point count of the shell inner < ||v|| <= outer.
  double predicted_count(double inner, double outer) const {
    return ball_volume(dim_, outer) - ball_volume(dim_, std::max(inner, 0.0));
  }

  /// Visits every lattice point with inner < ||v|| <= outer; with inner == 0
  /// that is every nonzero point of the closed ball.
  template <class Visitor>
  void for_each_in_shell(double inner, double outer, Visitor&& visit) const {
    if (!(outer > 0.0)) throw ValidationError("enumerate: radius must be > 0");
    if (!(inner >= 0.0) || inner > outer) throw ValidationError("enumerate: need 0 <= inner <= outer");
    if (outer / shortest_ > kMaxRadiusRatio) {
      throw ComputationError("enumerate: radius exceeds 1e7 times the shortest basis vector");
    }
    if (predicted_count(inner, outer) > kMaxPredictedPoints) {
      throw ComputationError("enumerate: predicted point count exceeds 1e8");
    }
    Walk<Visitor> walk(*this, inner, outer, visit);
    walk.descend(dim_ - 1, 0.0);
  }

  template <class Visitor>
  void for_each_in_ball(double radius, Visitor&& visit) const {
    for_each_in_shell(0.0, radius, std::forward<Visitor>(visit));
  }

 private:
  template <class Visitor>
  struct Walk {
    Walk(const PointEnumerator& e, double inner, double outer, Visitor& v)
        : self(e),
          visit(v),
          n(e.dim_),
          x(n, 0),
          coords(n, 0),
          vec(n),
          has_inner(inner > 0.0) {
      const double hi = outer + kBoundaryTolerance;
      hi2 = hi * hi;
      search2 = hi2 * (1.0 + 1e-10) + 1e-12;
      if (has_inner) {
        const double lo = inner + kBoundaryTolerance;
        lo2 = lo * lo;
        skip2 = lo2 * (1.0 - 1e-10) - 1e-12;
      }
    }

    void descend(int level, double partial) {
      const Matrix& r = self.r_;
      double shift = 0.0;
      for (int j = level + 1; j < n; ++j) shift += r(level, j) * static_cast<double>(x[j]);
      const double diag = r(level, level);
      const double center = -shift / diag;
      const double rem = search2 - partial;
      if (rem < 0.0) return;
      const double half = std::sqrt(rem) / std::abs(diag);
      const auto lo = static_cast<std::int64_t>(std::ceil(center - half));
      const auto hi = static_cast<std::int64_t>(std::floor(center + half));
      if (level > 0) {
        for (std::int64_t k = lo; k <= hi; ++k) {
          x[level] = k;
          const double d = diag * (static_cast<double>(k) - center);
          descend(level - 1, partial + d * d);
        }
        x[level] = 0;
        return;
      }
      // Innermost level: skip the run of x_0 values that is certainly inside
      // the inner radius.
      std::int64_t skip_from = hi + 1;
      std::int64_t skip_to = hi;
      if (has_inner && skip2 - partial > 0.0) {
        const double w = std::sqrt(skip2 - partial) / std::abs(diag);
        skip_from = static_cast<std::int64_t>(std::floor(center - w)) + 1;
        skip_to = static_cast<std::int64_t>(std::ceil(center + w)) - 1;
      }
      auto run = [&](std::int64_t first, std::int64_t last) {
        for (std::int64_t k = first; k <= last; ++k) {
          x[0] = k;
          emit();
        }
      };
      if (skip_to >= skip_from) {
        run(lo, std::min(hi, skip_from - 1));
        run(std::max(lo, skip_to + 1), hi);
      } else {
        run(lo, hi);
      }
      x[0] = 0;
    }

    void emit() {
      const Matrix& b = self.reduction_.lattice.basis();
      double norm2 = 0.0;
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += b(i, j) * static_cast<double>(x[j]);
        vec(i) = s;
        norm2 += s * s;
      }
      if (norm2 > hi2) return;
      if (has_inner) {
        if (norm2 <= lo2) return;
      } else if (std::all_of(x.begin(), x.end(), [](std::int64_t v) { return v == 0; })) {
        return;
      }
      const IntMatrix& u = self.reduction_.transform;
      for (int i = 0; i < n; ++i) {
        std::int64_t s = 0;
        for (int j = 0; j < n; ++j) s += u(i, j) * x[j];
        coords[i] = s;
      }
      visit(LatticePoint{vec, coords, norm2});
    }

    const PointEnumerator& self;
    Visitor& visit;
    int n;
    std::vector<std::int64_t> x;
    std::vector<std::int64_t> coords;
    Vector vec;
    bool has_inner;
    double hi2 = 0.0;
    double search2 = 0.0;
    double lo2 = 0.0;
    double skip2 = 0.0;
  };

  LllReduction reduction_;
  int dim_;
  Matrix r_;
  double shortest_ = 0.0;
};

/// Nonzero lattice vectors of norm <= T, each exactly once.
inline std::vector<Vector> points_in_ball(const Lattice& lattice, double radius) {
  std::vector<Vector> out;
  PointEnumerator(lattice).for_each_in_ball(radius, [&](const LatticePoint& p) { out.push_back(p.vector); });
  return out;
}

/// #{v in lattice \ {0} : region.contains(v)}
inline std::uint64_t count_region(const PointEnumerator& enumerator, const Region& region) {
  if (region.dim != enumerator.dim()) throw ValidationError("count_region: dimension mismatch");
  std::uint64_t count = 0;
  enumerator.for_each_in_ball(region.bounding_radius, [&](const LatticePoint& p) {
    if (region.contains(p.vector)) ++count;
  });
  return count;
}

inline std::uint64_t count_region(const Lattice& lattice, const Region& region) {
  return count_region(PointEnumerator(lattice), region);
}

enum class HeightMode { two_sided, positive_side };

/// Nonzero integer vector with small |Q(x)|, of minimal Euclidean norm.
struct SmallValue {
  std::vector<std::int64_t> x;
  double height = 0.0;
  double value = 0.0;
};

namespace detail {

inline bool accepts(HeightMode mode, double value, double eps) {
  return mode == HeightMode::two_sided ? std::abs(value) < eps : (value > 0.0 && value < eps);
}

}  // namespace detail

/// Minimal-height solutions of |Q(x)| < eps (or 0 < Q(x) < eps) over Z^n, one
/// per entry of `eps`, found in a single sweep over annuli (k-1, k] of
/// increasing radius up to t_max. Ties on the norm go to the
/// lexicographically smallest x. An entry is empty when no solution exists
/// with ||x|| <= t_max.
inline std::vector<std::optional<SmallValue>> min_height_solutions(const QuadraticForm& form,
                                                                   std::span<const double> eps,
                                                                   HeightMode mode, double t_max) {
  if (!form.indefinite()) throw ValidationError("min_height_solution: form must be indefinite");
  if (!(t_max > 0.0)) throw ValidationError("min_height_solution: T_max must be > 0");
  for (const double e : eps) {
    if (!(e > 0.0)) throw ValidationError("min_height_solution: eps must be > 0");
  }
  const int n = form.dim();
  const PointEnumerator lattice(integer_lattice(n));

  struct Best {
    std::int64_t norm2 = 0;
    std::vector<std::int64_t> x;
    double value = 0.0;
  };
  std::vector<std::optional<SmallValue>> result(eps.size());
  std::vector<std::size_t> open(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) open[i] = i;

  const auto rings = static_cast<std::int64_t>(std::ceil(t_max));
  for (std::int64_t k = 1; k <= rings && !open.empty(); ++k) {
    const double outer = std::min(static_cast<double>(k), t_max);
    const double inner = static_cast<double>(k - 1);
    if (outer <= inner) break;
    double widest = 0.0;
    for (const std::size_t i : open) widest = std::max(widest, eps[i]);
    std::vector<std::optional<Best>> best(eps.size());
    lattice.for_each_in_shell(inner, outer, [&](const LatticePoint& p) {
      const double value = evaluate(form, p.coords);
      if (!detail::accepts(mode, value, widest)) return;
      std::int64_t norm2 = 0;
      for (const std::int64_t c : p.coords) norm2 += c * c;
      for (const std::size_t i : open) {
        if (!detail::accepts(mode, value, eps[i])) continue;
        auto& slot = best[i];
        if (slot && (norm2 > slot->norm2 ||
                     (norm2 == slot->norm2 && !std::lexicographical_compare(p.coords.begin(), p.coords.end(),
                                                                            slot->x.begin(), slot->x.end())))) {
          continue;
        }
        slot = Best{norm2, std::vector<std::int64_t>(p.coords.begin(), p.coords.end()), value};
      }
    });
    std::vector<std::size_t> still_open;
    for (const std::size_t i : open) {
      if (best[i]) {
        result[i] = SmallValue{std::move(best[i]->x), std::sqrt(static_cast<double>(best[i]->norm2)), best[i]->value};
      } else {
        still_open.push_back(i);
      }
    }
    open = std::move(still_open);
  }
  return result;
}

inline std::optional<SmallValue> min_height_solution(const QuadraticForm& form, double eps, HeightMode mode,
                                                     double t_max) {
  const double one[] = {eps};
  return min_height_solutions(form, one, mode, t_max).front();
}

}  // namespace geonum
