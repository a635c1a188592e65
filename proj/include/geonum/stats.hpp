#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace geonum {

/// Summary of a Monte Carlo ensemble. variance is the unbiased estimator
/// and std_error = sqrt(variance / trials).
struct SampleStats {
  std::uint64_t trials = 0;
  double mean = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Welford accumulator with the exact pairwise merge.
class RunningStats {
 public:
  void add(double value) {
    ++count_;
    const double delta = value - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (value - mean_);
    min_ = std::min(min_, value);
    max_ = std::max(max_, value);
  }

  void merge(const RunningStats& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const double total = na + nb;
    const double delta = other.mean_ - mean_;
    mean_ += delta * nb / total;
    m2_ += other.m2_ + delta * delta * na * nb / total;
    count_ += other.count_;
    min_ = std::min(min_, other.min_);
    max_ = std::max(max_, other.max_);
  }

  std::uint64_t count() const { return count_; }

  SampleStats finish() const {
    SampleStats s;
    s.trials = count_;
    if (count_ == 0) return s;
    s.mean = mean_;
    s.variance = count_ > 1 ? std::max(0.0, m2_ / static_cast<double>(count_ - 1)) : 0.0;
    s.std_error = std::sqrt(s.variance / static_cast<double>(count_));
    s.min = min_;
    s.max = max_;
    // Guard the min <= mean <= max invariant against last-ulp drift.
    s.mean = std::clamp(s.mean, s.min, s.max);
    return s;
  }

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double min_ = std::numeric_limits<double>::infinity();
  double max_ = -std::numeric_limits<double>::infinity();
};

inline SampleStats summarize(std::span<const double> values) {
  RunningStats acc;
  for (const double v : values) acc.add(v);
  return acc.finish();
}

/// sqrt(p (1 - p) / trials)
inline double binomial_std_error(double p, std::uint64_t trials) {
  if (trials == 0) return 0.0;
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(trials));
}

}  // namespace geonum
