#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <vector>

#include "geonum/ball.hpp"
#include "geonum/enumerate.hpp"
#include "geonum/error.hpp"
#include "geonum/lattice.hpp"
#include "geonum/parallel.hpp"
#include "geonum/random.hpp"
#include "geonum/region.hpp"
#include "geonum/stats.hpp"
#include "geonum/volume.hpp"
#include "geonum/zeta.hpp"

namespace geonum {

/// Anything that maps a seed to a lattice.
template <class S>
concept LatticeSource = requires(const S& s, std::uint64_t seed) {
  { s(seed) } -> std::convertible_to<Lattice>;
};

/// Siegel transform of the indicator of `region`: sum over nonzero lattice
/// points of I_A, i.e. the nonzero point count.
inline std::uint64_t siegel_transform(const Lattice& lattice, const Region& region) {
  return count_region(lattice, region);
}

/// Constants of the ensemble statistics in dimension n.
struct Constants {
  int n = 3;
  double c_n = 0.0;

  static Constants of(int n) { return Constants{n, geonum::c_n(n)}; }
};

struct TrialCount {
  std::uint64_t index = 0;
  std::uint64_t seed = 0;
  std::uint64_t count = 0;
};

/// Siegel transform over `trials` independent lattices; trial i uses the
/// lattice sampler(derive_seed(master_seed, i)). Output is in trial order
/// regardless of `threads`.
template <LatticeSource Sampler>
std::vector<TrialCount> siegel_counts(const Sampler& sampler, const Region& region, std::uint64_t trials,
                                      std::uint64_t master_seed, unsigned threads = 1) {
  std::vector<TrialCount> out(trials);
  parallel_for(trials, threads, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(master_seed, i);
    out[i] = TrialCount{i, seed, siegel_transform(sampler(seed), region)};
  });
  return out;
}

inline SampleStats summarize(std::span<const TrialCount> counts) {
  RunningStats acc;
  for (const auto& c : counts) acc.add(static_cast<double>(c.count));
  return acc.finish();
}

/// Fraction of lattices that miss the region entirely.
inline double hole_fraction(std::span<const TrialCount> counts) {
  if (counts.empty()) return 0.0;
  std::uint64_t holes = 0;
  for (const auto& c : counts) holes += c.count == 0 ? 1 : 0;
  return static_cast<double>(holes) / static_cast<double>(counts.size());
}

/// Fraction of lattices with |N - |A|| > M |A|^(1/2).
inline double tail_fraction(std::span<const TrialCount> counts, double volume, double m) {
  if (!(m > 0.0)) throw ValidationError("concentration_tail: M must be > 0");
  if (!(volume >= 0.0)) throw ValidationError("concentration_tail: volume must be >= 0");
  if (counts.empty()) return 0.0;
  const double threshold = m * std::sqrt(volume);
  std::uint64_t far = 0;
  for (const auto& c : counts) far += std::abs(static_cast<double>(c.count) - volume) > threshold ? 1 : 0;
  return static_cast<double>(far) / static_cast<double>(counts.size());
}

/// Mean and variance of the Siegel transform over the sampler's ensemble.
template <LatticeSource Sampler>
SampleStats mean_variance(const Sampler& sampler, const Region& region, std::uint64_t trials,
                          std::uint64_t master_seed, unsigned threads = 1) {
  if (trials < 2) throw ValidationError("mean_variance: need at least 2 trials");
  const auto counts = siegel_counts(sampler, region, trials, master_seed, threads);
  return summarize(counts);
}

template <LatticeSource Sampler>
double hole_probability(const Sampler& sampler, const Region& region, std::uint64_t trials,
                        std::uint64_t master_seed, unsigned threads = 1) {
  if (trials < 100) throw ValidationError("hole_probability: need at least 100 trials");
  return hole_fraction(siegel_counts(sampler, region, trials, master_seed, threads));
}

template <LatticeSource Sampler>
double concentration_tail(const Sampler& sampler, const Region& region, double m, std::uint64_t trials,
                          std::uint64_t master_seed, unsigned threads = 1) {
  if (!(m > 0.0)) throw ValidationError("concentration_tail: M must be > 0");
  if (trials < 2) throw ValidationError("concentration_tail: need at least 2 trials");
  const double volume = region_volume(region, master_seed, threads).value;
  return tail_fraction(siegel_counts(sampler, region, trials, master_seed, threads), volume, m);
}

}  // namespace geonum
