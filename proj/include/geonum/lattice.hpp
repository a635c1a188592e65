#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "geonum/error.hpp"
#include "geonum/forms.hpp"
#include "geonum/random.hpp"

namespace geonum {

using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using IntVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

inline constexpr std::uint64_t kDefaultModulus = 1'000'003;

/// Unimodular lattice g Z^n, stored as a basis whose columns are b_1..b_n.
/// Every instance satisfies |det(basis) - 1| <= 1e-9.
class Lattice {
 public:
  /// With `normalize`, M is rescaled by |det M|^(-1/n) (first column negated
  /// when det < 0). Without it, M must already be unimodular.
  static Lattice from_basis(Matrix basis, bool normalize = false) {
    if (basis.rows() != basis.cols()) throw ValidationError("lattice: basis must be square");
    const auto n = basis.cols();
    if (n < 2) throw ValidationError("lattice: dimension must be >= 2");
    if (!basis.allFinite()) throw ValidationError("lattice: basis has non-finite entries");
    double det = basis.determinant();
    if (!(std::abs(det) >= 1e-12)) throw ValidationError("lattice: singular basis");
    if (normalize) {
      if (det < 0) {
        basis.col(0) = -basis.col(0);
        det = -det;
      }
      basis *= std::pow(det, -1.0 / static_cast<double>(n));
      det = basis.determinant();
    }
    if (std::abs(det - 1.0) > kUnimodularTolerance) {
      if (normalize) throw ComputationError("lattice: normalization lost unimodularity");
      throw ValidationError("lattice: basis is not unimodular (|det - 1| > 1e-9)");
    }
    return Lattice(std::move(basis));
  }

  int dim() const { return static_cast<int>(basis_.cols()); }
  const Matrix& basis() const { return basis_; }
  double determinant() const { return basis_.determinant(); }

 private:
  explicit Lattice(Matrix basis) : basis_(std::move(basis)) {}

  Matrix basis_;
};

/// The standard lattice Z^n.
inline Lattice integer_lattice(int n) { return Lattice::from_basis(Matrix::Identity(n, n)); }

/// Absolutely continuous random lattice: normalized Gaussian basis.
inline Lattice gaussian_unimodular(int n, std::uint64_t seed) {
  if (n < 2) throw ValidationError("gaussian_unimodular: n must be >= 2");
  Engine engine = make_engine(seed);
  return Lattice::from_basis(random_unimodular_matrix(n, engine), true);
}

namespace detail {

__extension__ typedef unsigned __int128 Wide;

inline std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<Wide>(a) * b % m);
}

inline std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  std::uint64_t result = 1 % m;
  base %= m;
  while (exp > 0) {
    if (exp & 1) result = mul_mod(result, base, m);
    base = mul_mod(base, base, m);
    exp >>= 1;
  }
  return result;
}

}  // namespace detail

/// Deterministic Miller-Rabin, exact for all 64-bit inputs.
inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  for (std::uint64_t a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    std::uint64_t x = detail::pow_mod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < r; ++i) {
      x = detail::mul_mod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

/// q-ary lattice with unscaled basis columns e_i + a_i e_n (i < n) and q e_n,
/// scaled by q^(-1/n).
inline Lattice goldstein_mayer(int n, std::uint64_t q, std::span<const std::uint64_t> coefficients) {
  if (n < 2) throw ValidationError("goldstein_mayer: n must be >= 2");
  if (q < 101) throw ValidationError("goldstein_mayer: modulus q must be >= 101");
  if (!is_prime(q)) throw ValidationError("goldstein_mayer: modulus q must be prime");
  if (static_cast<int>(coefficients.size()) != n - 1) {
    throw ValidationError("goldstein_mayer: need n - 1 coefficients");
  }
  const double scale = std::pow(static_cast<double>(q), -1.0 / n);
  Matrix basis = Matrix::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    if (coefficients[i] >= q) throw ValidationError("goldstein_mayer: coefficient must be < q");
    basis(i, i) = scale;
    basis(n - 1, i) = static_cast<double>(coefficients[i]) * scale;
  }
  basis(n - 1, n - 1) = static_cast<double>(q) * scale;
  return Lattice::from_basis(std::move(basis));
}

/// Approximate Haar sample: coefficients a uniform in {0..q-1}^(n-1).
inline Lattice goldstein_mayer(int n, std::uint64_t q, std::uint64_t seed) {
  if (n < 2) throw ValidationError("goldstein_mayer: n must be >= 2");
  if (q < 101) throw ValidationError("goldstein_mayer: modulus q must be >= 101");
  Engine engine = make_engine(seed);
  std::uniform_int_distribution<std::uint64_t> coefficient(0, q - 1);
  std::vector<std::uint64_t> a(n - 1);
  for (auto& value : a) value = coefficient(engine);
  return goldstein_mayer(n, q, a);
}

enum class SamplerKind { goldstein_mayer, gaussian };

/// Seed -> lattice. Pure in (kind, n, q, seed).
struct LatticeSampler {
  SamplerKind kind = SamplerKind::goldstein_mayer;
  int n = 3;
  std::uint64_t q = kDefaultModulus;

  Lattice operator()(std::uint64_t seed) const {
    return kind == SamplerKind::goldstein_mayer ? goldstein_mayer(n, q, seed)
                                                : gaussian_unimodular(n, seed);
  }
};

/// Reduced lattice together with the integral change of basis:
/// reduced.basis() == original.basis() * transform, det(transform) = 1.
struct LllReduction {
  Lattice lattice;
  IntMatrix transform;
};

namespace detail {

// Column k of basis * transform, accumulated in extended precision so that
// large cancelling coefficients do not erode the reduced vector.
inline void recompute_column(const Matrix& original, const IntMatrix& transform, Eigen::Index k,
                             Matrix& reduced) {
  const auto n = original.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    long double sum = 0.0L;
    for (Eigen::Index j = 0; j < n; ++j) {
      sum += static_cast<long double>(original(i, j)) * static_cast<long double>(transform(j, k));
    }
    reduced(i, k) = static_cast<double>(sum);
  }
}

// Gram-Schmidt with one re-orthogonalization pass.
inline void gram_schmidt(const Matrix& b, Matrix& mu, Vector& norms2) {
  const auto n = b.cols();
  Matrix star = b;
  mu.setZero(n, n);
  norms2.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < i; ++j) {
        const double c = star.col(i).dot(star.col(j)) / norms2(j);
        star.col(i) -= c * star.col(j);
        mu(i, j) += c;
      }
    }
    mu(i, i) = 1.0;
    norms2(i) = star.col(i).squaredNorm();
  }
}

}  // namespace detail

inline constexpr double kLllDelta = 0.99;
inline constexpr double kSizeReductionThreshold = 0.5001;

/// LLL reduction with Lovasz parameter `delta`, tracking the integral
/// change of basis exactly.
inline LllReduction lll_reduce_with_transform(const Lattice& input, double delta = kLllDelta) {
  if (!(delta > 0.25 && delta < 1.0)) throw ValidationError("lll_reduce: delta must lie in (0.25, 1)");
  const Matrix& original = input.basis();
  const Eigen::Index n = original.cols();
  {
    Eigen::JacobiSVD<Matrix> svd(original);
    const auto& s = svd.singularValues();
    const double condition = s(0) / s(n - 1);
    if (!(condition <= 1e12)) throw ComputationError("lll_reduce: basis condition number exceeds 1e12");
  }
  Matrix b = original;
  IntMatrix u = IntMatrix::Identity(n, n);
  Matrix mu;
  Vector norms2;
  detail::gram_schmidt(b, mu, norms2);

  auto size_reduce = [&](Eigen::Index k) {
    for (int pass = 0; pass < 64; ++pass) {
      bool changed = false;
      for (Eigen::Index j = k - 1; j >= 0; --j) {
        if (std::abs(mu(k, j)) <= kSizeReductionThreshold) continue;
        const double r = std::round(mu(k, j));
        if (std::abs(r) > 9e15) throw ComputationError("lll_reduce: coefficient overflow");
        const auto ri = static_cast<std::int64_t>(r);
        u.col(k) -= ri * u.col(j);
        for (Eigen::Index i = 0; i <= j; ++i) mu(k, i) -= r * mu(j, i);
        changed = true;
      }
      if (!changed) return;
      detail::recompute_column(original, u, k, b);
      detail::gram_schmidt(b, mu, norms2);
    }
    throw ComputationError("lll_reduce: size reduction did not converge");
  };

  Eigen::Index k = 1;
  for (long iterations = 0; k < n; ++iterations) {
    if (iterations > 1'000'000) throw ComputationError("lll_reduce: iteration limit reached");
    size_reduce(k);
    if (norms2(k) >= (delta - mu(k, k - 1) * mu(k, k - 1)) * norms2(k - 1)) {
      ++k;
    } else {
      b.col(k).swap(b.col(k - 1));
      u.col(k).swap(u.col(k - 1));
      detail::gram_schmidt(b, mu, norms2);
      k = std::max<Eigen::Index>(k - 1, 1);
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) detail::recompute_column(original, u, j, b);
  if (b.determinant() < 0) {
    b.col(n - 1) = -b.col(n - 1);
    u.col(n - 1) = -u.col(n - 1);
  }
  return LllReduction{Lattice::from_basis(std::move(b)), std::move(u)};
}

inline Lattice lll_reduce(const Lattice& input, double delta = kLllDelta) {
  return lll_reduce_with_transform(input, delta).lattice;
}

}  // namespace geonum
