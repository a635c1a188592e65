#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "geonum/error.hpp"
#include "geonum/random.hpp"

namespace geonum {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Counts of positive and negative eigenvalues of a nondegenerate form.
struct Signature {
  int positive = 0;
  int negative = 0;

  int dim() const { return positive + negative; }
  bool indefinite() const { return positive > 0 && negative > 0; }
  friend bool operator==(const Signature&, const Signature&) = default;
};

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kDegenerateEigenvalueRatio = 1e-9;
inline constexpr double kUnimodularTolerance = 1e-9;

/// Real quadratic form Q(x) = x^T G x in n >= 3 variables.
///
/// Immutable after construction. The constructor rejects asymmetric or
/// degenerate Gram matrices and caches the signature.
class QuadraticForm {
 public:
  explicit QuadraticForm(Matrix gram) {
    if (gram.rows() != gram.cols()) {
      throw ValidationError("quadratic form: Gram matrix must be square");
    }
    if (gram.rows() < 3) {
      throw ValidationError("quadratic form: dimension must be >= 3");
    }
    if (!gram.allFinite()) {
      throw ValidationError("quadratic form: Gram matrix has non-finite entries");
    }
    const Eigen::Index n = gram.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (std::abs(gram(i, j) - gram(j, i)) > kSymmetryTolerance) {
          throw ValidationError("quadratic form: Gram matrix is not symmetric");
        }
        const double mean = 0.5 * (gram(i, j) + gram(j, i));
        gram(i, j) = mean;
        gram(j, i) = mean;
      }
    }
    const double scale = gram.cwiseAbs().maxCoeff();
    if (scale == 0.0) throw ValidationError("quadratic form: zero form is degenerate");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(gram, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
      throw ComputationError("quadratic form: eigenvalue computation failed");
    }
    for (const double lambda : solver.eigenvalues()) {
      if (std::abs(lambda) < kDegenerateEigenvalueRatio * scale) {
        throw ValidationError("quadratic form: degenerate (zero eigenvalue)");
      }
      (lambda > 0 ? signature_.positive : signature_.negative) += 1;
    }
    gram_ = std::move(gram);
  }

  int dim() const { return static_cast<int>(gram_.rows()); }
  const Matrix& gram() const { return gram_; }
  Signature signature() const { return signature_; }
  bool indefinite() const { return signature_.indefinite(); }

 private:
  Matrix gram_;
  Signature signature_;
};

/// x^T G x as the full bilinear double sum. `x` may be any indexable vector
/// of arithmetic values (Eigen vector, std::vector, std::span).
template <class Vec>
double evaluate(const QuadraticForm& form, const Vec& x) {
  const int n = form.dim();
  if (static_cast<int>(x.size()) != n) {
    throw ValidationError("evaluate: vector length does not match form dimension");
  }
  const Matrix& g = form.gram();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double xi = static_cast<double>(x[i]);
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += g(i, j) * static_cast<double>(x[j]);
    total += xi * row;
  }
  return total;
}

inline Vector gradient(const QuadraticForm& form, const Vector& x) {
  if (x.size() != form.dim()) {
    throw ValidationError("gradient: vector length does not match form dimension");
  }
  return 2.0 * (form.gram() * x);
}

/// diag(+1 x p, -1 x q).
inline QuadraticForm standard_form(int p, int q) {
  if (p < 1 || q < 1) {
    throw ValidationError("standard_form: signature must be indefinite (p >= 1, q >= 1)");
  }
  if (p + q < 3) throw ValidationError("standard_form: p + q must be >= 3");
  Vector diagonal(p + q);
  diagonal.head(p).setOnes();
  diagonal.tail(q).setConstant(-1.0);
  return QuadraticForm(diagonal.asDiagonal().toDenseMatrix());
}

/// The form x -> Q0(g x), i.e. Gram matrix g^T G0 g, for det g = 1.
inline QuadraticForm deform(const QuadraticForm& base, const Matrix& g) {
  if (g.rows() != base.dim() || g.cols() != base.dim()) {
    throw ValidationError("deform: matrix dimension does not match form");
  }
  if (std::abs(g.determinant() - 1.0) > kUnimodularTolerance) {
    throw ValidationError("deform: matrix is not unimodular (|det g - 1| > 1e-9)");
  }
  Matrix gram = g.transpose() * base.gram() * g;
  gram = 0.5 * (gram + gram.transpose()).eval();
  QuadraticForm result(std::move(gram));
  // Sylvester's law of inertia.
  if (result.signature() != base.signature()) {
    throw ComputationError("deform: signature changed under congruence (ill-conditioned g)");
  }
  return result;
}

inline QuadraticForm negated(const QuadraticForm& form) { return QuadraticForm(-form.gram()); }

/// Gaussian matrix pushed onto det = +1: reject |det| < 1e-6, flip one column
/// if det < 0, divide by det^(1/n). Absolutely continuous, not Haar.
inline Matrix random_unimodular_matrix(int n, Engine& engine) {
  if (n < 2) throw ValidationError("random_unimodular_matrix: n must be >= 2");
  std::normal_distribution<double> normal;
  for (int attempt = 0; attempt < 100; ++attempt) {
    Matrix m(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) m(i, j) = normal(engine);
    }
    double det = m.determinant();
    if (!(std::abs(det) >= 1e-6)) continue;
    if (det < 0) {
      m.col(0) = -m.col(0);
      det = -det;
    }
    m /= std::pow(det, 1.0 / n);
    return m;
  }
  throw ComputationError("random_unimodular_matrix: 100 near-singular draws in a row");
}

/// Random form of signature (p, q): Q0 deformed by a seeded Gaussian
/// unimodular matrix. Irrationality holds almost surely and is not certified.
inline QuadraticForm random_form(int p, int q, std::uint64_t seed) {
  QuadraticForm base = standard_form(p, q);
  Engine engine = make_engine(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const Matrix g = random_unimodular_matrix(p + q, engine);
    try {
      return deform(base, g);
    } catch (const ComputationError&) {
      // congruence lost the signature numerically; redraw
    } catch (const ValidationError&) {
      // near-degenerate after congruence; redraw
    }
  }
  throw ComputationError("random_form: could not draw a well-conditioned deformation");
}

}  // namespace geonum
