#pragma once

#include <cmath>

#include "geonum/error.hpp"

namespace geonum {

/// Riemann zeta for real s >= 2: direct sum of k^-s for k < 10^4 (smallest
/// terms first, compensated) plus the Euler-Maclaurin tail through the B_6
/// term. The truncation error is below 1e-30 for s >= 2.
inline double riemann_zeta(double s) {
  if (!(s >= 2.0)) throw ValidationError("riemann_zeta: requires s >= 2");
  constexpr int kTerms = 10'000;
  double sum = 0.0;
  double carry = 0.0;
  for (int k = kTerms - 1; k >= 1; --k) {
    const double term = std::pow(static_cast<double>(k), -s) - carry;
    const double next = sum + term;
    carry = (next - sum) - term;
    sum = next;
  }
  const double n = kTerms;
  const double ns = std::pow(n, -s);
  const double tail = n * ns / (s - 1.0) + 0.5 * ns + s * ns / (12.0 * n) -
                      s * (s + 1) * (s + 2) * ns / (720.0 * n * n * n) +
                      s * (s + 1) * (s + 2) * (s + 3) * (s + 4) * ns / (30240.0 * n * n * n * n * n);
  return sum + tail;
}

/// 8 zeta(n-1) / zeta(n): the constant in the Rogers second-moment bound
/// and the hole-probability bound.
inline double c_n(int n) {
  if (n < 3) throw ValidationError("c_n: requires n >= 3 (zeta(n-1) diverges at n = 2)");
  return 8.0 * riemann_zeta(n - 1.0) / riemann_zeta(static_cast<double>(n));
}

}  // namespace geonum
