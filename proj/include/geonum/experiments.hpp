#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "geonum/enumerate.hpp"
#include "geonum/error.hpp"
#include "geonum/fit.hpp"
#include "geonum/forms.hpp"
#include "geonum/lattice.hpp"
#include "geonum/parallel.hpp"
#include "geonum/random.hpp"
#include "geonum/region.hpp"
#include "geonum/siegel.hpp"
#include "geonum/volume.hpp"

namespace geonum {

/// One row of experiment output. residual == observed - reference.
/// `censored` marks a search that hit its radius cap; such rows carry the
/// cap as `observed` and are excluded from fits.
struct ExperimentRecord {
  double parameter = 0.0;
  double observed = 0.0;
  double reference = 0.0;
  double residual = 0.0;
  std::uint64_t seed = 0;
  bool censored = false;
};

inline ExperimentRecord make_record(double parameter, double observed, double reference, std::uint64_t seed,
                                    bool censored = false) {
  return ExperimentRecord{parameter, observed, reference, observed - reference, seed, censored};
}

/// Geometric grid of `count` points from lo to hi inclusive.
inline std::vector<double> geometric_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw ValidationError("geometric_grid: need 0 < lo < hi, count >= 2");
  std::vector<double> grid(count);
  const double ratio = std::log(hi / lo) / (count - 1);
  for (int i = 0; i < count; ++i) grid[i] = lo * std::exp(ratio * i);
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

namespace detail {

inline void require_increasing(std::span<const double> grid, std::size_t min_size, const char* what) {
  if (grid.size() < min_size) throw ValidationError(std::string(what) + ": grid too short");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw ValidationError(std::string(what) + ": grid must be positive and strictly increasing");
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Small values: minimal heights of |Q(x)| < 2^-j.

struct SmallValuesResult {
  std::vector<ExperimentRecord> records;
  std::optional<FitResult> fit;
  int censored = 0;
};

/// For eps_j = 2^-j, j = 1..j_max, records the minimal height h_j and fits
/// log h_j against log(1/eps_j). Reference is eps^(-1/(n-2)).
inline SmallValuesResult small_values_experiment(const QuadraticForm& form, int j_max, HeightMode mode,
                                                 double t_max, std::uint64_t seed = 0) {
  if (j_max < 6) throw ValidationError("small_values_experiment: j_max must be >= 6");
  if (!form.indefinite()) throw ValidationError("small_values_experiment: form must be indefinite");
  const int n = form.dim();
  std::vector<double> eps(j_max);
  for (int j = 1; j <= j_max; ++j) eps[j - 1] = std::ldexp(1.0, -j);
  const auto solutions = min_height_solutions(form, eps, mode, t_max);

  SmallValuesResult out;
  std::vector<std::pair<double, double>> points;
  for (int j = 0; j < j_max; ++j) {
    const double reference = std::pow(eps[j], -1.0 / (n - 2));
    if (solutions[j]) {
      out.records.push_back(make_record(eps[j], solutions[j]->height, reference, seed));
      points.emplace_back(1.0 / eps[j], solutions[j]->height);
    } else {
      out.records.push_back(make_record(eps[j], t_max, reference, seed, true));
      ++out.censored;
    }
  }
  if (points.size() >= 3) out.fit = fit_loglog(points);
  return out;
}

struct SmallValuesRun {
  std::uint64_t seed = 0;
  SmallValuesResult result;
};

/// small_values_experiment on `forms` random forms of the given signature;
/// form i is random_form(p, q, derive_seed(master_seed, i)).
inline std::vector<SmallValuesRun> small_values_ensemble(Signature signature, int forms, int j_max, HeightMode mode,
                                                         double t_max, std::uint64_t master_seed,
                                                         unsigned threads = 1) {
  if (forms < 1) throw ValidationError("small_values_ensemble: need at least one form");
  std::vector<SmallValuesRun> runs(forms);
  parallel_for(forms, threads, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(master_seed, i);
    const QuadraticForm form = random_form(signature.positive, signature.negative, seed);
    runs[i] = SmallValuesRun{seed, small_values_experiment(form, j_max, mode, t_max, seed)};
  });
  return runs;
}

// ---------------------------------------------------------------------------
// Error term of N(Q, a, b, T).

/// N(Q, a, b, T) for every T of an increasing grid, from one enumeration of
/// Z^n at the largest T.
inline std::vector<std::uint64_t> count_form_values(const QuadraticForm& form, double a, double b,
                                                    std::span<const double> radii) {
  if (!(a < b)) throw ValidationError("count_form_values: need a < b");
  detail::require_increasing(radii, 1, "count_form_values");
  std::vector<double> norms2;
  PointEnumerator(integer_lattice(form.dim())).for_each_in_ball(radii.back(), [&](const LatticePoint& p) {
    const double value = evaluate(form, p.coords);
    if (a < value && value < b) norms2.push_back(p.norm2);
  });
  std::sort(norms2.begin(), norms2.end());
  std::vector<std::uint64_t> counts;
  counts.reserve(radii.size());
  for (const double t : radii) {
    const double hi = t + kBoundaryTolerance;
    counts.push_back(static_cast<std::uint64_t>(std::upper_bound(norms2.begin(), norms2.end(), hi * hi) - norms2.begin()));
  }
  return counts;
}

struct ErrorTermResult {
  std::vector<ExperimentRecord> records;
  std::optional<FitResult> residual_fit;
};

/// Observed N(Q, a, b, T) against the main term c_Q (b - a) T^(n-2), with a
/// log-log fit of |residual| over T (zero residuals dropped).
inline ErrorTermResult error_term_experiment(const QuadraticForm& form, double a, double b,
                                             std::span<const double> radii, double c_q, std::uint64_t seed = 0) {
  if (!(a < b)) throw ValidationError("error_term_experiment: need a < b");
  detail::require_increasing(radii, 6, "error_term_experiment");
  if (!(c_q > 0.0)) throw ValidationError("error_term_experiment: c_Q must be > 0");
  const int n = form.dim();
  const auto counts = count_form_values(form, a, b, radii);
  ErrorTermResult out;
  std::vector<std::pair<double, double>> points;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double reference = c_q * (b - a) * std::pow(radii[i], n - 2);
    const auto rec = make_record(radii[i], static_cast<double>(counts[i]), reference, seed);
    if (rec.residual != 0.0) points.emplace_back(radii[i], std::abs(rec.residual));
    out.records.push_back(rec);
  }
  if (points.size() >= 3) out.residual_fit = fit_loglog(points);
  return out;
}

struct ErrorTermRun {
  std::uint64_t seed = 0;
  CqEstimate c_q;
  ErrorTermResult result;
};

/// Random forms, each with its own c_Q estimate over the same T grid.
inline std::vector<ErrorTermRun> error_term_ensemble(Signature signature, double a, double b,
                                                     std::span<const double> radii, int forms,
                                                     std::uint64_t volume_samples, std::uint64_t master_seed,
                                                     unsigned threads = 1) {
  if (forms < 1) throw ValidationError("error_term_ensemble: need at least one form");
  detail::require_increasing(radii, 6, "error_term_ensemble");
  std::vector<ErrorTermRun> runs(forms);
  parallel_for(forms, threads, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(master_seed, i);
    const QuadraticForm form = random_form(signature.positive, signature.negative, seed);
    CqEstimate cq = c_q_estimate(form, a, b, radii, volume_samples, derive_seed(seed, 1));
    ErrorTermResult result = error_term_experiment(form, a, b, radii, cq.c_q, seed);
    runs[i] = ErrorTermRun{seed, std::move(cq), std::move(result)};
  });
  return runs;
}

// ---------------------------------------------------------------------------
// Dilates: |N(L, tA) - t^n| < t^(2n/3 + delta).

struct LatticeVerdict {
  std::uint64_t seed = 0;
  bool passed = false;
};

struct DilatesResult {
  std::vector<ExperimentRecord> records;
  std::vector<LatticeVerdict> verdicts;
  double pass_fraction = 0.0;
};

/// N(L, tA) for every t of an increasing grid, from one enumeration at the
/// largest dilate.
inline std::vector<std::uint64_t> count_dilates(const Lattice& lattice, const Region& base,
                                                std::span<const double> factors) {
  detail::require_increasing(factors, 1, "count_dilates");
  std::vector<std::uint64_t> counts(factors.size(), 0);
  const PointEnumerator enumerator(lattice);
  const double reach = factors.back() * base.bounding_radius;
  if (base.gauge) {
    std::vector<std::uint64_t> first_hit(factors.size() + 1, 0);
    enumerator.for_each_in_ball(reach, [&](const LatticePoint& p) {
      const double g = base.gauge(p.vector);
      const auto idx = std::lower_bound(factors.begin(), factors.end(), g) - factors.begin();
      ++first_hit[static_cast<std::size_t>(idx)];
    });
    std::uint64_t running = 0;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      running += first_hit[i];
      counts[i] = running;
    }
    return counts;
  }
  enumerator.for_each_in_ball(reach, [&](const LatticePoint& p) {
    const double norm = std::sqrt(p.norm2);
    for (std::size_t i = 0; i < factors.size(); ++i) {
      if (norm > factors[i] * base.bounding_radius + kBoundaryTolerance) continue;
      if (base.contains(p.vector / factors[i])) ++counts[i];
    }
  });
  return counts;
}

/// Checks each sampled lattice on the upper half of the t grid. The region
/// must have volume 1 to within 1% (closed form, or Monte Carlo within 1%
/// plus three standard errors).
template <LatticeSource Sampler>
DilatesResult dilates_experiment(const Sampler& sampler, const Region& base, std::span<const double> factors,
                                 double delta, std::uint64_t lattices, std::uint64_t master_seed,
                                 unsigned threads = 1) {
  const int n = base.dim;
  if (n < 4) throw ValidationError("dilates_experiment: requires n >= 4");
  if (!(delta > 0.0)) throw ValidationError("dilates_experiment: delta must be > 0");
  if (lattices < 1) throw ValidationError("dilates_experiment: need at least one lattice");
  detail::require_increasing(factors, 2, "dilates_experiment");
  const VolumeEstimate volume = region_volume(base, master_seed, threads);
  if (std::abs(volume.value - 1.0) > 0.01 + 3.0 * volume.std_error) {
    throw ValidationError("dilates_experiment: region volume must be 1 (within 1%)");
  }
  const double exponent = 2.0 * n / 3.0 + delta;
  const std::size_t upper = factors.size() / 2;

  std::vector<std::vector<ExperimentRecord>> per_lattice(lattices);
  DilatesResult out;
  out.verdicts.resize(lattices);
  parallel_for(lattices, threads, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(master_seed, i);
    const auto counts = count_dilates(sampler(seed), base, factors);
    bool passed = true;
    auto& rows = per_lattice[i];
    for (std::size_t k = 0; k < factors.size(); ++k) {
      const double t = factors[k];
      const auto rec = make_record(t, static_cast<double>(counts[k]), std::pow(t, n), seed);
      if (k >= upper && !(std::abs(rec.residual) < std::pow(t, exponent))) passed = false;
      rows.push_back(rec);
    }
    out.verdicts[i] = LatticeVerdict{seed, passed};
  });
  std::uint64_t passing = 0;
  for (std::size_t i = 0; i < lattices; ++i) {
    out.records.insert(out.records.end(), per_lattice[i].begin(), per_lattice[i].end());
    passing += out.verdicts[i].passed ? 1 : 0;
  }
  out.pass_fraction = static_cast<double>(passing) / static_cast<double>(lattices);
  return out;
}

// ---------------------------------------------------------------------------
// Sequences: |N(L, B_k) - |B_k|| < |B_k|^(1/2) f(k) eventually.

/// f(k) = coefficient * k^exponent. Summability of f(k)^-2 is exactly
/// exponent > 1/2, checked at construction.
class PowerGrowth {
 public:
  PowerGrowth(double coefficient, double exponent) : coefficient_(coefficient), exponent_(exponent) {
    if (!(coefficient > 0.0)) throw ValidationError("growth function: coefficient must be > 0");
    if (!(exponent > 0.5)) {
      throw ValidationError("growth function: sum of f(k)^-2 diverges unless the exponent is > 1/2");
    }
  }

  double operator()(double k) const { return coefficient_ * std::pow(k, exponent_); }
  double coefficient() const { return coefficient_; }
  double exponent() const { return exponent_; }

 private:
  double coefficient_;
  double exponent_;
};

struct SequencesResult {
  std::vector<ExperimentRecord> records;
  /// Per lattice: the largest k <= k_max violating the bound, 0 if none.
  std::vector<int> last_violation;
  std::vector<std::uint64_t> seeds;
};

template <LatticeSource Sampler>
SequencesResult sequences_experiment(const Sampler& sampler, const std::function<Region(int)>& sets,
                                     const PowerGrowth& growth, int k_max, std::uint64_t lattices,
                                     std::uint64_t master_seed, unsigned threads = 1) {
  if (k_max < 1) throw ValidationError("sequences_experiment: k_max must be >= 1");
  if (lattices < 1) throw ValidationError("sequences_experiment: need at least one lattice");
  std::vector<Region> regions;
  std::vector<double> volumes;
  for (int k = 1; k <= k_max; ++k) {
    regions.push_back(sets(k));
    if (regions.back().dim < 3) throw ValidationError("sequences_experiment: requires n >= 3");
    volumes.push_back(region_volume(regions.back(), derive_seed(~master_seed, k), threads).value);
  }
  std::vector<std::vector<ExperimentRecord>> per_lattice(lattices);
  SequencesResult out;
  out.last_violation.assign(lattices, 0);
  out.seeds.assign(lattices, 0);
  parallel_for(lattices, threads, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(master_seed, i);
    const PointEnumerator enumerator(sampler(seed));
    for (int k = 1; k <= k_max; ++k) {
      const double volume = volumes[k - 1];
      const auto count = count_region(enumerator, regions[k - 1]);
      const auto rec = make_record(k, static_cast<double>(count), volume, seed);
      if (!(std::abs(rec.residual) < std::sqrt(volume) * growth(k))) out.last_violation[i] = k;
      per_lattice[i].push_back(rec);
    }
    out.seeds[i] = seed;
  });
  for (auto& rows : per_lattice) out.records.insert(out.records.end(), rows.begin(), rows.end());
  return out;
}

/// Fraction of lattices whose last violation index is below k_min.
inline double fraction_settled_by(std::span<const int> last_violation, int k_min) {
  if (last_violation.empty()) return 0.0;
  const auto settled = std::count_if(last_violation.begin(), last_violation.end(), [&](int k) { return k < k_min; });
  return static_cast<double>(settled) / static_cast<double>(last_violation.size());
}

}  // namespace geonum
