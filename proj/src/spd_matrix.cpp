#include "spdddpm/spd_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <utility>

namespace spdddpm {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw NotSymmetricError(std::string(what) + ": matrix has non-finite entries");
  }
}

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    std::ostringstream os;
    os << what << ": expected a nonempty square matrix, got " << m.rows() << "x" << m.cols();
    throw DimensionMismatchError(os.str());
  }
}

/// Symmetrize after checking the relative asymmetry gate.
Matrix checked_symmetrize(const Matrix& m, const char* what) {
  require_square(m, what);
  require_finite(m, what);
  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kAsymmetryTol * std::max(scale, 1.0)) {
    std::ostringstream os;
    os << what << ": asymmetry " << asym << " exceeds tolerance " << kAsymmetryTol * std::max(scale, 1.0);
    throw NotSymmetricError(os.str());
  }
  return ((m + m.transpose()) * 0.5).eval();
}

}  // namespace

SymmetricMatrix::SymmetricMatrix(const Matrix& m) : m_(checked_symmetrize(m, "SymmetricMatrix")) {}

SymmetricMatrix SymmetricMatrix::Zero(Eigen::Index dim) {
  return trusted_symmetric(Matrix::Zero(dim, dim));
}

SymmetricMatrix trusted_symmetric(Matrix m) {
  return SymmetricMatrix(std::move(m), SymmetricMatrix::Trusted{});
}

SpdMatrix SpdMatrix::Identity(Eigen::Index dim) {
  return trusted_spd(Matrix::Identity(dim, dim));
}

SpdMatrix trusted_spd(Matrix m) { return SpdMatrix(std::move(m)); }

SpdMatrix validate_spd(const Matrix& m, double spd_floor) {
  Matrix sym = checked_symmetrize(m, "validate_spd");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("validate_spd: eigendecomposition failed to converge");
  }
  const double lambda_min = solver.eigenvalues().minCoeff();
  if (!(lambda_min > spd_floor)) {
    std::ostringstream os;
    os << "validate_spd: smallest eigenvalue " << lambda_min << " is not above the floor "
       << spd_floor;
    throw NotPositiveDefiniteError(os.str(), lambda_min);
  }
  return trusted_spd(std::move(sym));
}

namespace {

SpectralDecomposition eig_impl(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("eig: eigendecomposition failed to converge");
  }
  return SpectralDecomposition{solver.eigenvectors(), solver.eigenvalues()};
}

/// U f(lambda) U^T, resymmetrized to kill rounding drift.
Matrix spectral_map(const SpectralDecomposition& sd, const std::function<double(double)>& f) {
  Vector mapped(sd.lambda.size());
  for (Eigen::Index i = 0; i < sd.lambda.size(); ++i) mapped[i] = f(sd.lambda[i]);
  Matrix out = sd.u * mapped.asDiagonal() * sd.u.transpose();
  return ((out + out.transpose()) * 0.5).eval();
}

}  // namespace

SpectralDecomposition eig(const SymmetricMatrix& s) { return eig_impl(s.mat()); }

SpectralDecomposition eig(const SpdMatrix& x) { return eig_impl(x.mat()); }

SymmetricMatrix mat_log(const SpdMatrix& x) {
  return trusted_symmetric(spectral_map(eig(x), [](double l) { return std::log(l); }));
}

SpdMatrix mat_exp(const SymmetricMatrix& s) {
  Matrix out = spectral_map(eig(s), [](double l) { return std::exp(l); });
  if (!out.allFinite()) {
    throw NotPositiveDefiniteError("mat_exp: overflow produced non-finite entries", 0.0);
  }
  return trusted_spd(std::move(out));
}

SpdMatrix mat_pow(const SpdMatrix& x, double a) {
  return trusted_spd(spectral_map(eig(x), [a](double l) { return std::pow(l, a); }));
}

SpdMatrix mat_sqrt(const SpdMatrix& x) { return mat_pow(x, 0.5); }

SpdMatrix mat_inv_sqrt(const SpdMatrix& x) { return mat_pow(x, -0.5); }

SpdMatrix mat_inv(const SpdMatrix& x) { return mat_pow(x, -1.0); }

namespace {

void require_same_dim(const SpdMatrix& x, const SpdMatrix& y, const char* what) {
  if (x.dim() != y.dim()) {
    std::ostringstream os;
    os << what << ": dimension mismatch " << x.dim() << " vs " << y.dim();
    throw DimensionMismatchError(os.str());
  }
}

}  // namespace

SpdMatrix oplus(const SpdMatrix& x, const SpdMatrix& y) {
  require_same_dim(x, y, "oplus");
  return mat_exp(trusted_symmetric(mat_log(x).mat() + mat_log(y).mat()));
}

SpdMatrix ominus(const SpdMatrix& x, const SpdMatrix& y) {
  require_same_dim(x, y, "ominus");
  return mat_exp(trusted_symmetric(mat_log(x).mat() - mat_log(y).mat()));
}

SpdMatrix odot(double a, const SpdMatrix& x) {
  if (!std::isfinite(a)) throw Error("odot: non-finite exponent");
  return mat_pow(x, a);
}

SpdMatrix group_action(const SpdMatrix& x, const Matrix& a) {
  require_square(a, "group_action");
  if (a.rows() != x.dim()) {
    std::ostringstream os;
    os << "group_action: matrix of dim " << x.dim() << " acted on by " << a.rows() << "x"
       << a.cols();
    throw DimensionMismatchError(os.str());
  }
  require_finite(a, "group_action");
  // Scale-aware singularity gate: |det A| compared against eps * max|a_ij|^m.
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  const double det = a.determinant();
  const double bound = 1e-12 * std::pow(scale, static_cast<double>(a.rows()));
  if (std::abs(det) <= bound) {
    std::ostringstream os;
    os << "group_action: matrix is numerically singular (|det| = " << std::abs(det) << ")";
    throw SingularActionError(os.str());
  }
  Matrix out = a.transpose() * x.mat() * a;
  return trusted_spd(((out + out.transpose()) * 0.5).eval());
}

double dist_affine(const SpdMatrix& x, const SpdMatrix& y) {
  require_same_dim(x, y, "dist_affine");
  const Matrix xi = mat_inv_sqrt(x).mat();
  Matrix w = xi * y.mat() * xi;
  w = ((w + w.transpose()) * 0.5).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(w, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("dist_affine: eigendecomposition failed to converge");
  }
  double sum_sq = 0.0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    const double l = solver.eigenvalues()[i];
    if (!(l > 0.0)) {
      throw NotPositiveDefiniteError("dist_affine: whitened matrix lost positivity", l);
    }
    const double r = std::log(l);
    sum_sq += r * r;
  }
  return std::sqrt(sum_sq);
}

double dist_frobenius(const SpdMatrix& x, const SpdMatrix& y) {
  require_same_dim(x, y, "dist_frobenius");
  return (x.mat() - y.mat()).norm();
}

double volume_density(const SpdMatrix& x) {
  const double m = static_cast<double>(x.dim());
  const Vector lambda = eig(x).lambda;
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) log_det += std::log(lambda[i]);
  return std::exp(-0.5 * (m + 1.0) * log_det);
}

}  // namespace spdddpm
