#pragma once

#include <Eigen/Dense>

#include "spdddpm/errors.hpp"

namespace spdddpm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenvalues below this bound fail SPD validation by default.
inline constexpr double kDefaultSpdFloor = 1e-12;

/// Relative asymmetry tolerated before symmetrization is refused.
inline constexpr double kAsymmetryTol = 1e-8;

/// Eigendecomposition of a symmetric matrix: columns of `u` are orthonormal
/// eigenvectors, `lambda` holds the matching eigenvalues in ascending order.
struct SpectralDecomposition {
  Matrix u;
  Vector lambda;
};

/// A real symmetric matrix.  Construction symmetrizes the input and rejects
/// non-finite entries or asymmetry beyond kAsymmetryTol (relative to the
/// largest entry magnitude).
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(const Matrix& m);

  static SymmetricMatrix Zero(Eigen::Index dim);

  [[nodiscard]] const Matrix& mat() const { return m_; }
  [[nodiscard]] Eigen::Index dim() const { return m_.rows(); }

 private:
  struct Trusted {};
  SymmetricMatrix(Matrix m, Trusted) : m_(std::move(m)) {}
  Matrix m_;

  friend SymmetricMatrix trusted_symmetric(Matrix m);
};

/// Internal factory for values already known to be exactly symmetric.
SymmetricMatrix trusted_symmetric(Matrix m);

/// A symmetric positive definite matrix.  Instances can only be produced by
/// validate_spd (or operations built on it), so holding an SpdMatrix certifies
/// symmetry and a positive spectrum at construction time.
class SpdMatrix {
 public:
  [[nodiscard]] const Matrix& mat() const { return m_; }
  [[nodiscard]] Eigen::Index dim() const { return m_.rows(); }

  static SpdMatrix Identity(Eigen::Index dim);

 private:
  explicit SpdMatrix(Matrix m) : m_(std::move(m)) {}
  Matrix m_;

  friend SpdMatrix validate_spd(const Matrix& m, double spd_floor);
  friend SpdMatrix trusted_spd(Matrix m);
};

/// Internal factory for values positive definite by construction.
SpdMatrix trusted_spd(Matrix m);

/// Validates m as SPD: symmetrizes (rejecting asymmetry beyond kAsymmetryTol),
/// rejects non-finite entries, and requires every eigenvalue > spd_floor.
/// Throws NotSymmetricError or NotPositiveDefiniteError (with the offending
/// eigenvalue attached).
SpdMatrix validate_spd(const Matrix& m, double spd_floor = kDefaultSpdFloor);

/// Eigendecomposition via a dedicated symmetric solver; eigenvalues ascending.
SpectralDecomposition eig(const SymmetricMatrix& s);
SpectralDecomposition eig(const SpdMatrix& x);

/// Matrix logarithm of an SPD matrix (symmetric result).
SymmetricMatrix mat_log(const SpdMatrix& x);

/// Matrix exponential of a symmetric matrix (SPD result).
SpdMatrix mat_exp(const SymmetricMatrix& s);

/// Real matrix power X^a through the spectrum.
SpdMatrix mat_pow(const SpdMatrix& x, double a);

SpdMatrix mat_sqrt(const SpdMatrix& x);
SpdMatrix mat_inv_sqrt(const SpdMatrix& x);
SpdMatrix mat_inv(const SpdMatrix& x);

/// Commutative group addition: X (+) Y = exp(log X + log Y).
SpdMatrix oplus(const SpdMatrix& x, const SpdMatrix& y);

/// Group subtraction: X (-) Y = exp(log X - log Y).
SpdMatrix ominus(const SpdMatrix& x, const SpdMatrix& y);

/// Scalar action: a (.) X = X^a.
SpdMatrix odot(double a, const SpdMatrix& x);

/// Congruence action X . A = A^T X A.  A must be square, matching X's
/// dimension, and nonsingular (|det A| checked against a scale-aware bound);
/// otherwise SingularActionError / DimensionMismatchError.
SpdMatrix group_action(const SpdMatrix& x, const Matrix& a);

/// Affine-invariant distance: || log(X^{-1/2} Y X^{-1/2}) ||_F.
double dist_affine(const SpdMatrix& x, const SpdMatrix& y);

/// Euclidean (Frobenius) distance between the raw matrices.
double dist_frobenius(const SpdMatrix& x, const SpdMatrix& y);

/// Density of the invariant volume element with respect to Lebesgue measure
/// on the upper triangle: det(X)^{-(m+1)/2}.
double volume_density(const SpdMatrix& x);

}  // namespace spdddpm
