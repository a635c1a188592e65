#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "geonum/error.hpp"

namespace geonum {

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int points_used = 0;
};

/// Ordinary least squares of log y on log x.
inline FitResult fit_loglog(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 3) throw ValidationError("fit_loglog: need at least 3 points");
  const double count = static_cast<double>(pairs.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : pairs) {
    if (!(x > 0.0) || !(y > 0.0)) throw ValidationError("fit_loglog: data must be strictly positive");
    mx += std::log(x);
    my += std::log(y);
  }
  mx /= count;
  my /= count;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& [x, y] : pairs) {
    const double dx = std::log(x) - mx;
    const double dy = std::log(y) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0.0) throw ValidationError("fit_loglog: abscissae must not all be equal");
  FitResult fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  // A constant response is fitted perfectly by slope 0.
  fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  fit.points_used = static_cast<int>(pairs.size());
  return fit;
}

inline double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace geonum
