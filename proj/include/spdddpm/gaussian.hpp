#pragma once

#include <optional>

#include "spdddpm/rng.hpp"
#include "spdddpm/spd_matrix.hpp"

namespace spdddpm {

/// Gaussian distribution on the SPD manifold:
///   p(X | mean, sigma^2) = (1/zeta(sigma)) exp(-d(X, mean)^2 / (2 sigma^2))
/// with respect to the invariant volume element det(X)^{-(m+1)/2} prod dX_ij.
struct RiemannianGaussian {
  SpdMatrix mean;
  double sigma;

  RiemannianGaussian(SpdMatrix mean_, double sigma_);
};

/// Controls for the Metropolis-Hastings sampler in eigenvalue-log coordinates.
/// proposal_std defaults to 0.5 * sigma when unset.  Each one-shot draw runs a
/// fresh chain of burn_in + mh_steps steps; thinning applies to ChainSampler,
/// which reuses one chain for a stream of draws.
struct EigenSamplerConfig {
  int mh_steps = 400;
  std::optional<double> proposal_std;
  int burn_in = 200;
  int thinning = 5;

  void validate() const;
};

/// -d(X, mean)^2 / (2 sigma^2); the exponent of the density.
double log_density_unnormalized(const RiemannianGaussian& g, const SpdMatrix& x);

/// Normalizing constant zeta(sigma) for m in {1,2,3} by quadrature in
/// eigenvalue-log coordinates r:
///   zeta = omega_m * Int_{R^m} exp(-|r|^2/2sigma^2) prod_{i<j} sinh(|r_i-r_j|/2) dr
/// where omega_m is the orthogonal-group volume constant of the spectral
/// change of variables: omega_1 = 1, omega_2 = pi, omega_3 = 8 pi^2 / 3.
/// Throws UnsupportedDimensionError for m > 3.
double normalizer_zeta(double sigma, int m);
double log_normalizer_zeta(double sigma, int m);

/// log_density_unnormalized minus log zeta (m <= 3 only).
double log_density(const RiemannianGaussian& g, const SpdMatrix& x);

/// Haar-distributed orthogonal matrix: QR of an iid standard normal matrix
/// with the R-diagonal sign correction.
Matrix haar_orthogonal(int m, Rng& rng);

/// Markov chain on r in R^m targeting the spectral density
///   exp(-|r|^2/2sigma^2) * prod_{i<j} sinh(|r_i-r_j|/2),
/// Gaussian random-walk proposals.  Exposed so callers can amortize burn-in
/// across a stream of draws (states taken every cfg.thinning steps).
class ChainSampler {
 public:
  ChainSampler(double sigma, int m, EigenSamplerConfig cfg, Rng& rng);

  /// Advances the chain and returns the next retained state's SPD sample
  /// (first call pays burn_in + mh_steps, later calls thinning steps).
  SpdMatrix next();

  const Vector& state() const { return r_; }
  long accepted() const { return accepted_; }
  long proposed() const { return proposed_; }

 private:
  void advance(int steps);
  double sigma_;
  int m_;
  EigenSamplerConfig cfg_;
  Rng& rng_;
  Vector r_;
  double log_target_;
  long accepted_ = 0;
  long proposed_ = 0;
  bool primed_ = false;
};

/// One draw from G(I, sigma^2): fresh MH chain in spectral coordinates, then
/// conjugation by a Haar orthogonal frame.
SpdMatrix sample_standard(double sigma, int m, const EigenSamplerConfig& cfg, Rng& rng);

/// One draw from g: Proposition 1 translation of a standard draw,
/// X = mean^{1/2} eps mean^{1/2}.
SpdMatrix sample(const RiemannianGaussian& g, const EigenSamplerConfig& cfg, Rng& rng);

/// Cheap approximate sampler: Gaussian in log coordinates (S_ii ~ N(0,s^2),
/// S_ij ~ N(0,s^2/2)), X = mean^{1/2} exp(S) mean^{1/2}.  Ignores the
/// sinh repulsion of the exact spectral law; documented approximate.
SpdMatrix sample_tangent_approx(const RiemannianGaussian& g, Rng& rng);

/// P(d(X, I) <= rho) for X ~ G(I, sigma^2), m in {1, 2}; the radial law used
/// by the decile tests.  m=1 is closed form, m=2 integrates the spectral
/// density in polar coordinates.
double radial_cdf(double sigma, int m, double rho);

}  // namespace spdddpm
