#include "spdddpm/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace spdddpm {

namespace {

constexpr double kPi = std::numbers::pi;

struct GaussLegendre {
  std::vector<double> x;  // nodes on [a, b]
  std::vector<double> w;
};

/// Gauss-Legendre rule on [a, b] by Newton iteration on P_n.
GaussLegendre gauss_legendre(int n, double a, double b) {
  GaussLegendre rule;
  rule.x.resize(n);
  rule.w.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.x[i] = 0.5 * (b - a) * (-x) + 0.5 * (a + b);
    rule.x[n - 1 - i] = 0.5 * (b - a) * x + 0.5 * (a + b);
    rule.w[i] = rule.w[n - 1 - i] = 0.5 * (b - a) * w;
  }
  return rule;
}

/// log(sinh(x)) for x > 0, stable for both tails.
double log_sinh(double x) {
  return x + std::log1p(-std::exp(-2.0 * x)) - std::log(2.0);
}

/// log of sum w_i exp(L_i) by max-shift.
double log_weighted_sum_exp(const std::vector<double>& logw, const std::vector<double>& l) {
  double lmax = -std::numeric_limits<double>::infinity();
  for (double v : l) lmax = std::max(lmax, v);
  if (!std::isfinite(lmax)) return -std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) s += std::exp(logw[i] + l[i] - lmax);
  return lmax + std::log(s);
}

/// Upper cutoff for integrals of exp(-c g^2 / sigma^2 + O(g)): past the mode
/// (at most ~sigma^2) plus a generous multiple of the Gaussian width.
double gap_cutoff(double sigma) { return sigma * sigma + 45.0 * sigma + 10.0; }

/// zeta(sigma, 2) = 2 pi sqrt(pi) sigma * Int_0^inf exp(-g^2/4s^2) sinh(g/2) dg,
/// after reducing the plane integral to the eigenvalue gap g = r_1 - r_2 > 0.
double log_zeta_m2(double sigma) {
  const int n = 600;
  const GaussLegendre gl = gauss_legendre(n, 0.0, gap_cutoff(sigma));
  std::vector<double> logw(n), l(n);
  for (int i = 0; i < n; ++i) {
    const double g = gl.x[i];
    logw[i] = std::log(gl.w[i]);
    l[i] = -g * g / (4.0 * sigma * sigma) + log_sinh(0.5 * g);
  }
  return std::log(2.0 * kPi * std::sqrt(kPi) * sigma) + log_weighted_sum_exp(logw, l);
}

/// zeta(sigma, 3) = omega_3 * 2 sigma sqrt(6 pi) * J with
///   J = Int_{g1,g2>0} exp(-(g1^2+g2^2+g1 g2)/3s^2)
///       sinh(g1/2) sinh(g2/2) sinh((g1+g2)/2) dg1 dg2,
/// obtained from the ordered sector via gap coordinates (Jacobian 1/3, trace
/// direction integrated analytically).
double log_zeta_m3(double sigma) {
  const double omega3 = 8.0 * kPi * kPi / 3.0;
  const int n = 360;
  const GaussLegendre gl = gauss_legendre(n, 0.0, gap_cutoff(sigma));
  std::vector<double> logw;
  std::vector<double> l;
  logw.reserve(static_cast<std::size_t>(n) * n);
  l.reserve(static_cast<std::size_t>(n) * n);
  const double inv = 1.0 / (3.0 * sigma * sigma);
  for (int i = 0; i < n; ++i) {
    const double g1 = gl.x[i];
    for (int j = 0; j < n; ++j) {
      const double g2 = gl.x[j];
      logw.push_back(std::log(gl.w[i] * gl.w[j]));
      l.push_back(-(g1 * g1 + g2 * g2 + g1 * g2) * inv + log_sinh(0.5 * g1) +
                  log_sinh(0.5 * g2) + log_sinh(0.5 * (g1 + g2)));
    }
  }
  return std::log(omega3 * 2.0 * sigma * std::sqrt(6.0 * kPi)) + log_weighted_sum_exp(logw, l);
}

void require_sigma(double sigma, const char* what) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(std::string(what) + ": sigma must be positive and finite");
  }
}

/// Log of the spectral target exp(-|r|^2/2s^2) prod sinh(|r_i-r_j|/2).
double log_spectral_target(const Vector& r, double sigma) {
  double l = -r.squaredNorm() / (2.0 * sigma * sigma);
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    for (Eigen::Index j = i + 1; j < r.size(); ++j) {
      const double gap = std::abs(r[i] - r[j]);
      if (gap == 0.0) return -std::numeric_limits<double>::infinity();
      l += log_sinh(0.5 * gap);
    }
  }
  return l;
}

}  // namespace

RiemannianGaussian::RiemannianGaussian(SpdMatrix mean_, double sigma_)
    : mean(std::move(mean_)), sigma(sigma_) {
  require_sigma(sigma, "RiemannianGaussian");
}

void EigenSamplerConfig::validate() const {
  if (mh_steps < 1) throw ConfigError("EigenSamplerConfig: mh_steps must be >= 1");
  if (burn_in < 0) throw ConfigError("EigenSamplerConfig: burn_in must be >= 0");
  if (thinning < 1) throw ConfigError("EigenSamplerConfig: thinning must be >= 1");
  if (proposal_std && !(*proposal_std > 0.0)) {
    throw ConfigError("EigenSamplerConfig: proposal_std must be positive");
  }
}

double log_density_unnormalized(const RiemannianGaussian& g, const SpdMatrix& x) {
  const double d = dist_affine(x, g.mean);
  return -d * d / (2.0 * g.sigma * g.sigma);
}

double log_normalizer_zeta(double sigma, int m) {
  require_sigma(sigma, "normalizer_zeta");
  switch (m) {
    case 1:
      return std::log(std::sqrt(2.0 * kPi) * sigma);
    case 2:
      return log_zeta_m2(sigma);
    case 3:
      return log_zeta_m3(sigma);
    default:
      throw UnsupportedDimensionError("normalizer_zeta: only m in {1,2,3} is supported");
  }
}

double normalizer_zeta(double sigma, int m) { return std::exp(log_normalizer_zeta(sigma, m)); }

double log_density(const RiemannianGaussian& g, const SpdMatrix& x) {
  return log_density_unnormalized(g, x) -
         log_normalizer_zeta(g.sigma, static_cast<int>(g.mean.dim()));
}

Matrix haar_orthogonal(int m, Rng& rng) {
  if (m < 1) throw DimensionMismatchError("haar_orthogonal: m must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR();
  for (int j = 0; j < m; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

ChainSampler::ChainSampler(double sigma, int m, EigenSamplerConfig cfg, Rng& rng)
    : sigma_(sigma), m_(m), cfg_(cfg), rng_(rng) {
  require_sigma(sigma, "ChainSampler");
  if (m < 1) throw DimensionMismatchError("ChainSampler: m must be >= 1");
  cfg_.validate();
  std::normal_distribution<double> normal(0.0, sigma_);
  r_.resize(m_);
  for (int i = 0; i < m_; ++i) r_[i] = normal(rng_);
  log_target_ = log_spectral_target(r_, sigma_);
}

void ChainSampler::advance(int steps) {
  const double step_std = cfg_.proposal_std.value_or(0.5 * sigma_);
  std::normal_distribution<double> normal(0.0, step_std);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector proposal(m_);
  for (int s = 0; s < steps; ++s) {
    for (int i = 0; i < m_; ++i) proposal[i] = r_[i] + normal(rng_);
    const double log_target_new = log_spectral_target(proposal, sigma_);
    const double log_u = std::log(unif(rng_));
    ++proposed_;
    if (log_u < log_target_new - log_target_) {
      r_ = proposal;
      log_target_ = log_target_new;
      ++accepted_;
    }
  }
}

SpdMatrix ChainSampler::next() {
  if (!primed_) {
    advance(cfg_.burn_in + cfg_.mh_steps);
    primed_ = true;
  } else {
    advance(cfg_.thinning);
  }
  const Matrix o = haar_orthogonal(m_, rng_);
  Vector scale(m_);
  for (int i = 0; i < m_; ++i) scale[i] = std::exp(r_[i]);
  Matrix x = o * scale.asDiagonal() * o.transpose();
  return validate_spd(x);
}

SpdMatrix sample_standard(double sigma, int m, const EigenSamplerConfig& cfg, Rng& rng) {
  ChainSampler chain(sigma, m, cfg, rng);
  return chain.next();
}

SpdMatrix sample(const RiemannianGaussian& g, const EigenSamplerConfig& cfg, Rng& rng) {
  const SpdMatrix eps = sample_standard(g.sigma, static_cast<int>(g.mean.dim()), cfg, rng);
  return group_action(eps, mat_sqrt(g.mean).mat());
}

SpdMatrix sample_tangent_approx(const RiemannianGaussian& g, Rng& rng) {
  const int m = static_cast<int>(g.mean.dim());
  std::normal_distribution<double> diag(0.0, g.sigma);
  std::normal_distribution<double> off(0.0, g.sigma / std::sqrt(2.0));
  Matrix s = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    s(i, i) = diag(rng);
    for (int j = i + 1; j < m; ++j) s(i, j) = s(j, i) = off(rng);
  }
  return group_action(mat_exp(trusted_symmetric(std::move(s))), mat_sqrt(g.mean).mat());
}

double radial_cdf(double sigma, int m, double rho) {
  require_sigma(sigma, "radial_cdf");
  if (rho <= 0.0) return 0.0;
  if (m == 1) return std::erf(rho / (sigma * std::sqrt(2.0)));
  if (m != 2) throw UnsupportedDimensionError("radial_cdf: only m in {1,2} is supported");

  // Radial density of |r|: f(s) = s exp(-s^2/2sigma^2) h(s) with the angular
  // factor h(s) = Int_0^{pi/2} sinh((s/sqrt(2)) cos(phi)) dphi.
  const GaussLegendre angular = gauss_legendre(64, 0.0, 0.5 * kPi);
  const auto density = [&](double s) {
    double h = 0.0;
    for (std::size_t k = 0; k < angular.x.size(); ++k) {
      h += angular.w[k] * std::sinh(s / std::sqrt(2.0) * std::cos(angular.x[k]));
    }
    return s * std::exp(-s * s / (2.0 * sigma * sigma)) * h;
  };
  const double smax = gap_cutoff(sigma);
  const auto integrate = [&](double lo, double hi, int n) {
    const GaussLegendre gl = gauss_legendre(n, lo, hi);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += gl.w[i] * density(gl.x[i]);
    return acc;
  };
  const double total = integrate(0.0, smax, 480);
  if (rho >= smax) return 1.0;
  return std::clamp(integrate(0.0, rho, 320) / total, 0.0, 1.0);
}

}  // namespace spdddpm
