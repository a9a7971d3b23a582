#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "helpers.hpp"
#include "spdddpm/gaussian.hpp"

using namespace spdddpm;
using testutil::random_spd;

namespace {

constexpr double kPi = std::numbers::pi;

// Closed forms used as quadrature oracles:
//   m=1: zeta = sqrt(2 pi) sigma
//   m=2: zeta = 2 pi^2 sigma^2 exp(sigma^2/4) erf(sigma/2)
double zeta1_closed(double sigma) { return std::sqrt(2.0 * kPi) * sigma; }
double zeta2_closed(double sigma) {
  return 2.0 * kPi * kPi * sigma * sigma * std::exp(sigma * sigma / 4.0) * std::erf(sigma / 2.0);
}

// Direct Monte Carlo form of the spectral integral:
//   zeta = omega_m (2 pi sigma^2)^{m/2} E[prod_{i<j} sinh(|r_i - r_j|/2)],
// r ~ N(0, sigma^2 I_m).
double zeta3_mc(double sigma, int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, sigma);
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    const double a = normal(rng), b = normal(rng), c = normal(rng);
    acc += std::sinh(std::abs(a - b) / 2.0) * std::sinh(std::abs(a - c) / 2.0) *
           std::sinh(std::abs(b - c) / 2.0);
  }
  const double omega3 = 8.0 * kPi * kPi / 3.0;
  return omega3 * std::pow(2.0 * kPi * sigma * sigma, 1.5) * acc / n;
}

}  // namespace

TEST_CASE("log density") {
  auto rng = make_rng(21);
  const SpdMatrix mean = random_spd(3, rng);
  const RiemannianGaussian g(mean, 0.7);
  CHECK(log_density_unnormalized(g, mean) == doctest::Approx(0.0).epsilon(1e-12));

  Matrix d = Matrix::Identity(2, 2);
  d(0, 0) = std::exp(2.0);
  const RiemannianGaussian std2(SpdMatrix::Identity(2), 1.0);
  CHECK(log_density_unnormalized(std2, validate_spd(d)) == doctest::Approx(-2.0).epsilon(1e-10));
  CHECK(log_density(std2, validate_spd(d)) ==
        doctest::Approx(-2.0 - std::log(normalizer_zeta(1.0, 2))).epsilon(1e-10));

  // Invariance: pushing X and the mean through the same congruence leaves the
  // exponent unchanged.
  std::normal_distribution<double> normal;
  Matrix a(3, 3);
  for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = normal(rng);
  const SpdMatrix x = random_spd(3, rng);
  const RiemannianGaussian pushed(group_action(mean, a), 0.7);
  CHECK(log_density_unnormalized(pushed, group_action(x, a)) ==
        doctest::Approx(log_density_unnormalized(g, x)).epsilon(1e-8));

  CHECK_THROWS_AS(log_density_unnormalized(g, SpdMatrix::Identity(2)), DimensionMismatchError);
  CHECK_THROWS_AS(RiemannianGaussian(mean, 0.0), Error);
  CHECK_THROWS_AS(RiemannianGaussian(mean, -1.0), Error);
}

TEST_CASE("normalizer_zeta against closed forms") {
  for (const double sigma : {0.25, 0.5, 1.0, 2.0}) {
    CHECK(normalizer_zeta(sigma, 1) == doctest::Approx(zeta1_closed(sigma)).epsilon(1e-10));
    CHECK(normalizer_zeta(sigma, 2) == doctest::Approx(zeta2_closed(sigma)).epsilon(1e-8));
  }
  // Monotone in sigma for every supported m.
  for (int m = 1; m <= 3; ++m) {
    CHECK(normalizer_zeta(0.3, m) < normalizer_zeta(0.5, m));
    CHECK(normalizer_zeta(0.5, m) < normalizer_zeta(0.8, m));
  }
  CHECK_THROWS_AS(normalizer_zeta(0.5, 4), UnsupportedDimensionError);
  CHECK(std::log(normalizer_zeta(0.5, 3)) == doctest::Approx(log_normalizer_zeta(0.5, 3)));
}

TEST_CASE("normalizer_zeta m=3 against Monte Carlo") {
  auto rng = make_rng(22);
  for (const double sigma : {0.3, 0.5}) {
    const double mc = zeta3_mc(sigma, 400000, rng);
    CHECK(normalizer_zeta(sigma, 3) == doctest::Approx(mc).epsilon(0.05));
  }
}

TEST_CASE("haar_orthogonal") {
  auto rng = make_rng(23);
  for (int rep = 0; rep < 50; ++rep) {
    const Matrix q = haar_orthogonal(3, rng);
    CHECK(testutil::max_abs_diff(q.transpose() * q, Matrix::Identity(3, 3)) < 1e-12);
  }
  // m=1 gives +1 and -1, both occurring.
  int plus = 0, minus = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const double v = haar_orthogonal(1, rng)(0, 0);
    CHECK(std::abs(std::abs(v) - 1.0) < 1e-14);
    (v > 0 ? plus : minus)++;
  }
  CHECK(plus > 0);
  CHECK(minus > 0);
  // Isotropy of the first column direction: mean entry near zero.
  double mean_entry = 0.0;
  const int n = 2000;
  for (int rep = 0; rep < n; ++rep) mean_entry += haar_orthogonal(3, rng)(0, 0);
  CHECK(std::abs(mean_entry / n) < 0.05);
}

TEST_CASE("sampler exactness at m=1: log-sample normality") {
  // For m=1 the spectral law is exactly N(0, sigma^2) on log X.
  const EigenSamplerConfig cfg;
  for (const double sigma : {0.25, 1.0}) {
    auto rng = make_rng(24 + static_cast<std::uint64_t>(sigma * 8));
    std::vector<double> z;
    z.reserve(5000);
    for (int i = 0; i < 5000; ++i) {
      const SpdMatrix x = sample_standard(sigma, 1, cfg, rng);
      z.push_back(std::log(x.mat()(0, 0)) / sigma);
    }
    const double p = testutil::anderson_darling_pvalue(z);
    INFO("sigma = " << sigma << ", AD p = " << p);
    CHECK(p > 0.01);
  }
}

TEST_CASE("small sigma concentrates near the mean") {
  auto rng = make_rng(25);
  const EigenSamplerConfig cfg;
  const SpdMatrix eye = SpdMatrix::Identity(3);
  for (int i = 0; i < 200; ++i) {
    const SpdMatrix x = sample_standard(0.01, 3, cfg, rng);
    CHECK(dist_affine(x, eye) < 0.05);
  }
}

TEST_CASE("m=2 decile positions match the radial quadrature") {
  // Decile boundaries of d(X, I), X ~ G(I, 0.25), from the radial law
  // f(s) ~ s exp(-s^2/2 sigma^2) Int sinh((s/sqrt 2) cos phi) dphi.
  const double sigma = 0.5;
  const double edges[9] = {0.387584, 0.508318, 0.604939, 0.693152, 0.779837,
                           0.870203, 0.970538, 1.092212, 1.267481};
  for (int k = 0; k < 9; ++k) {
    CHECK(radial_cdf(sigma, 2, edges[k]) == doctest::Approx(0.1 * (k + 1)).epsilon(2e-3));
  }

  auto rng = make_rng(26);
  const EigenSamplerConfig cfg;
  const int n = 5000;
  std::vector<double> d;
  d.reserve(n);
  const SpdMatrix eye = SpdMatrix::Identity(2);
  for (int i = 0; i < n; ++i) d.push_back(dist_affine(sample_standard(sigma, 2, cfg, rng), eye));
  std::sort(d.begin(), d.end());
  for (int k = 1; k <= 9; ++k) {
    const double empirical = d[static_cast<std::size_t>(k * n / 10) - 1];
    INFO("decile " << k << ": empirical " << empirical << " vs " << edges[k - 1]);
    CHECK(std::abs(empirical / edges[k - 1] - 1.0) < 0.05);
  }
}

TEST_CASE("radial_cdf") {
  CHECK(radial_cdf(0.5, 1, 0.7) == doctest::Approx(std::erf(0.7 / (0.5 * std::sqrt(2.0)))));
  CHECK(radial_cdf(0.5, 2, 0.0) == 0.0);
  CHECK(radial_cdf(0.5, 2, 8.0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(radial_cdf(0.5, 2, 0.4) < radial_cdf(0.5, 2, 0.6));
  CHECK_THROWS_AS(radial_cdf(0.5, 3, 1.0), UnsupportedDimensionError);
}

TEST_CASE("Proposition 1: translated samples match direct samples") {
  auto rng = make_rng(27);
  const SpdMatrix mean = random_spd(3, rng, 0.4);
  const double sigma = 0.4;
  const RiemannianGaussian g(mean, sigma);
  const EigenSamplerConfig cfg;

  const int n = 800;
  std::vector<double> translated, direct;
  translated.reserve(n);
  direct.reserve(n);
  const Matrix half = mat_sqrt(mean).mat();
  for (int i = 0; i < n; ++i) {
    const SpdMatrix eps = sample_standard(sigma, 3, cfg, rng);
    translated.push_back(dist_affine(group_action(eps, half), mean));
    direct.push_back(dist_affine(sample(g, cfg, rng), mean));
  }
  const double p = testutil::ks_two_sample_pvalue(translated, direct);
  INFO("KS p = " << p);
  CHECK(p > 0.01);

  // The translation is an isometry, so radial distances match the standard law.
  std::vector<double> standard;
  standard.reserve(n);
  const SpdMatrix eye = SpdMatrix::Identity(3);
  for (int i = 0; i < n; ++i)
    standard.push_back(dist_affine(sample_standard(sigma, 3, cfg, rng), eye));
  CHECK(testutil::ks_two_sample_pvalue(direct, standard) > 0.01);
}

TEST_CASE("chain sampler bookkeeping") {
  auto rng = make_rng(28);
  EigenSamplerConfig cfg;
  ChainSampler chain(0.5, 3, cfg, rng);
  (void)chain.next();
  CHECK(chain.proposed() == cfg.burn_in + cfg.mh_steps);
  (void)chain.next();
  CHECK(chain.proposed() == cfg.burn_in + cfg.mh_steps + cfg.thinning);
  const double rate = static_cast<double>(chain.accepted()) / chain.proposed();
  CHECK(rate > 0.1);
  CHECK(rate < 0.95);

  // Same seed, same draw.
  auto rng_a = make_rng(29);
  auto rng_b = make_rng(29);
  const SpdMatrix a = sample_standard(0.5, 3, cfg, rng_a);
  const SpdMatrix b = sample_standard(0.5, 3, cfg, rng_b);
  CHECK(testutil::max_abs_diff(a.mat(), b.mat()) == 0.0);
}

TEST_CASE("sampler config validation") {
  EigenSamplerConfig cfg;
  cfg.mh_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.thinning = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.proposal_std = -0.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.burn_in = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("tangent approximation stays on the manifold") {
  auto rng = make_rng(30);
  const SpdMatrix mean = random_spd(3, rng);
  const RiemannianGaussian g(mean, 0.3);
  for (int i = 0; i < 50; ++i) {
    const SpdMatrix x = sample_tangent_approx(g, rng);
    CHECK(x.dim() == 3);
    CHECK_NOTHROW(validate_spd(x.mat()));
  }
}
