#pragma once

#include <vector>

#include "spdddpm/spd_matrix.hpp"

namespace spdddpm {

struct FrechetConfig {
  int max_iters = 200;
  double step = 1.0;
  double tol = 1e-8;

  void validate() const;
};

struct FrechetResult {
  SpdMatrix mean;
  bool converged;
  int iters;
  double grad_norm;   // Frobenius norm of the tangent mean at the returned point
  double objective;   // (1/N) sum d(mean, X_n)^2
  std::vector<double> objective_trace;  // objective at the start and after each accepted step
};

/// Mean squared affine distance from x to the samples (Eq. 30 objective).
double frechet_objective(const SpdMatrix& x, const std::vector<SpdMatrix>& samples);

/// Karcher fixed-point iteration
///   X <- X^{1/2} exp((step/N) sum_n log(X^{-1/2} X_n X^{-1/2})) X^{1/2}
/// with step halving whenever the objective would increase.  Converged when
/// the tangent-mean norm drops below cfg.tol; otherwise returns the best
/// iterate with converged = false.
FrechetResult frechet_mean(const std::vector<SpdMatrix>& samples, const FrechetConfig& cfg = {});

}  // namespace spdddpm
