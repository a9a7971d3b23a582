#include "spdddpm/frechet.hpp"

#include <cmath>
#include <utility>

namespace spdddpm {

void FrechetConfig::validate() const {
  if (max_iters < 1) throw ConfigError("FrechetConfig: max_iters must be >= 1");
  if (!(step > 0.0) || step > 1.0) throw ConfigError("FrechetConfig: step must be in (0, 1]");
  if (!(tol > 0.0)) throw ConfigError("FrechetConfig: tol must be positive");
}

double frechet_objective(const SpdMatrix& x, const std::vector<SpdMatrix>& samples) {
  if (samples.empty()) throw EmptySampleSetError("frechet_objective: empty sample set");
  double acc = 0.0;
  for (const SpdMatrix& s : samples) {
    const double d = dist_affine(x, s);
    acc += d * d;
  }
  return acc / static_cast<double>(samples.size());
}

namespace {

/// Tangent mean at x: (1/N) sum log(x^{-1/2} X_n x^{-1/2}).
Matrix tangent_mean(const SpdMatrix& x, const std::vector<SpdMatrix>& samples) {
  const Matrix xi = mat_inv_sqrt(x).mat();
  Matrix acc = Matrix::Zero(x.dim(), x.dim());
  for (const SpdMatrix& s : samples) {
    acc += mat_log(validate_spd(xi * s.mat() * xi, 0.0)).mat();
  }
  return acc / static_cast<double>(samples.size());
}

}  // namespace

FrechetResult frechet_mean(const std::vector<SpdMatrix>& samples, const FrechetConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw EmptySampleSetError("frechet_mean: empty sample set");
  const Eigen::Index m = samples.front().dim();
  for (const SpdMatrix& s : samples) {
    if (s.dim() != m) throw DimensionMismatchError("frechet_mean: mixed dimensions");
  }

  Matrix arith = Matrix::Zero(m, m);
  for (const SpdMatrix& s : samples) arith += s.mat();
  SpdMatrix x = validate_spd(arith / static_cast<double>(samples.size()), 0.0);

  double objective = frechet_objective(x, samples);
  std::vector<double> trace{objective};
  int iter = 0;
  double grad_norm = tangent_mean(x, samples).norm();
  for (; iter < cfg.max_iters && grad_norm >= cfg.tol; ++iter) {
    const Matrix tm = tangent_mean(x, samples);
    grad_norm = tm.norm();
    if (grad_norm < cfg.tol) break;
    const Matrix sq = mat_sqrt(x).mat();
    double tau = cfg.step;
    bool moved = false;
    for (int halving = 0; halving < 40; ++halving) {
      const Matrix stepped = sq * mat_exp(trusted_symmetric(tau * tm)).mat() * sq;
      const SpdMatrix candidate = validate_spd(stepped, 0.0);
      const double cand_objective = frechet_objective(candidate, samples);
      if (cand_objective <= objective + 1e-15) {
        x = candidate;
        objective = cand_objective;
        trace.push_back(objective);
        moved = true;
        break;
      }
      tau *= 0.5;
    }
    if (!moved) break;
    grad_norm = tangent_mean(x, samples).norm();
  }
  return FrechetResult{x, grad_norm < cfg.tol, iter, grad_norm, objective, std::move(trace)};
}

}  // namespace spdddpm
