#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "geonum/ball.hpp"
#include "geonum/error.hpp"
#include "geonum/forms.hpp"
#include "geonum/parallel.hpp"
#include "geonum/random.hpp"
#include "geonum/region.hpp"

namespace geonum {

enum class VolumeMethod { closed_form, monte_carlo, thin_shell };

struct VolumeEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
  VolumeMethod method = VolumeMethod::closed_form;
};

inline constexpr std::uint64_t kMinVolumeSamples = 10'000;
inline constexpr std::uint64_t kDefaultVolumeSamples = 1'000'000;

namespace detail {

inline constexpr std::uint64_t kVolumeChunk = 1u << 16;

// Hits among `count` uniform points of B(0, radius) from one seeded stream.
inline std::uint64_t count_hits(const Region& region, std::uint64_t count, std::uint64_t seed) {
  Engine engine = make_engine(seed);
  std::normal_distribution<double> normal;
  const int n = region.dim;
  const double inv_n = 1.0 / n;
  Vector point(n);
  std::uint64_t hits = 0;
  for (std::uint64_t s = 0; s < count; ++s) {
    double norm2 = 0.0;
    do {
      for (int i = 0; i < n; ++i) point(i) = normal(engine);
      norm2 = point.squaredNorm();
    } while (norm2 == 0.0);
    const double radius = region.bounding_radius * std::pow(uniform01(engine), inv_n);
    point *= radius / std::sqrt(norm2);
    if (region.contains(point)) ++hits;
  }
  return hits;
}

}  // namespace detail

/// Hit-or-miss volume: uniform samples in B(0, bounding_radius) (Gaussian
/// direction, radius R u^(1/n)), estimate = hit fraction x ball volume,
/// binomial standard error. Samples are drawn in fixed chunks with derived
/// seeds, so the result does not depend on `threads`.
inline VolumeEstimate mc_volume(const Region& region, std::uint64_t samples, std::uint64_t seed,
                                unsigned threads = 1) {
  if (samples < kMinVolumeSamples) throw ValidationError("mc_volume: need at least 1e4 samples");
  if (region.dim < 1 || !region.contains) throw ValidationError("mc_volume: invalid region");
  const std::uint64_t chunks = (samples + detail::kVolumeChunk - 1) / detail::kVolumeChunk;
  std::vector<std::uint64_t> hits(chunks, 0);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::uint64_t begin = c * detail::kVolumeChunk;
    const std::uint64_t count = std::min(detail::kVolumeChunk, samples - begin);
    hits[c] = detail::count_hits(region, count, derive_seed(seed, c));
  });
  std::uint64_t total = 0;
  for (const auto h : hits) total += h;
  const double ball = ball_volume(region.dim, region.bounding_radius);
  const double p = static_cast<double>(total) / static_cast<double>(samples);
  VolumeEstimate est;
  est.value = p * ball;
  est.std_error = ball * std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
  est.samples = samples;
  est.method = VolumeMethod::monte_carlo;
  return est;
}

/// Closed form when the region carries a volume hint, else Monte Carlo with
/// 1e6 samples.
inline VolumeEstimate region_volume(const Region& region, std::uint64_t seed, unsigned threads = 1) {
  if (region.volume_hint) return VolumeEstimate{*region.volume_hint, 0.0, 0, VolumeMethod::closed_form};
  return mc_volume(region, kDefaultVolumeSamples, seed, threads);
}

struct CqRow {
  double radius = 0.0;
  double volume = 0.0;
  double std_error = 0.0;
  double normalized = 0.0;  // volume / ((b - a) T^(n-2))
  double residual = 0.0;    // normalized - c_Q
};

struct CqEstimate {
  double c_q = 0.0;
  double std_error = 0.0;
  std::vector<CqRow> rows;
};

/// Estimates c_Q in |Q^{-1}(a,b) cap B(0,T)| ~ c_Q (b-a) T^(n-2): shell
/// volumes by Monte Carlo on each T of the grid, normalized, and c_Q taken
/// as the mean over the top half of the grid.
inline CqEstimate c_q_estimate(const QuadraticForm& form, double a, double b, std::span<const double> radii,
                               std::uint64_t samples, std::uint64_t seed, unsigned threads = 1) {
  if (!(a < b)) throw ValidationError("c_q_estimate: need a < b");
  if (radii.size() < 4) throw ValidationError("c_q_estimate: T grid needs at least 4 points");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0) || (i > 0 && !(radii[i] > radii[i - 1]))) {
      throw ValidationError("c_q_estimate: T grid must be positive and strictly increasing");
    }
  }
  const int n = form.dim();
  CqEstimate out;
  out.rows.resize(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double t = radii[i];
    const VolumeEstimate v = mc_volume(Region::quad_shell(form, a, b, t), samples, derive_seed(seed, i), threads);
    const double scale = (b - a) * std::pow(t, n - 2);
    out.rows[i] = CqRow{t, v.value, v.std_error, v.value / scale, 0.0};
  }
  const std::size_t first = radii.size() / 2;
  double sum = 0.0;
  double var = 0.0;
  for (std::size_t i = first; i < radii.size(); ++i) {
    sum += out.rows[i].normalized;
    const double se = out.rows[i].std_error / ((b - a) * std::pow(out.rows[i].radius, n - 2));
    var += se * se;
  }
  const double used = static_cast<double>(radii.size() - first);
  out.c_q = sum / used;
  out.std_error = std::sqrt(var) / used;
  for (auto& row : out.rows) row.residual = row.normalized - out.c_q;
  return out;
}

inline constexpr double kDefaultThinShellEta = 1e-3;

/// Thin-shell estimate of the level-set integral of 1/||grad P|| over
/// {P = 0} cap B(0,1): vol({|P| < eta} cap B(0,1)) / (2 eta).
/// For a definite form the level set is the origin and the estimate tends to 0.
inline VolumeEstimate c_p_surface(const QuadraticForm& form, double eta, std::uint64_t samples, std::uint64_t seed,
                                  unsigned threads = 1) {
  if (!(eta > 0.0)) throw ValidationError("c_p_surface: eta must be > 0");
  VolumeEstimate v = mc_volume(Region::quad_shell(form, -eta, eta, 1.0), samples, seed, threads);
  v.value /= 2.0 * eta;
  v.std_error /= 2.0 * eta;
  v.method = VolumeMethod::thin_shell;
  return v;
}

}  // namespace geonum
