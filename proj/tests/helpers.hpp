#pragma once

// Shared test utilities: random SPD inputs and the two classical
// goodness-of-fit p-values used by the sampler tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "spdddpm/rng.hpp"
#include "spdddpm/spd_matrix.hpp"

namespace testutil {

using spdddpm::Matrix;
using spdddpm::Rng;
using spdddpm::SpdMatrix;
using spdddpm::Vector;

inline Matrix random_symmetric(int dim, Rng& rng, double scale = 0.5) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix s(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) {
      const double v = normal(rng);
      s(i, j) = v;
      s(j, i) = v;
    }
  return s;
}

inline SpdMatrix random_spd(int dim, Rng& rng, double scale = 0.5) {
  return spdddpm::mat_exp(spdddpm::SymmetricMatrix(random_symmetric(dim, rng, scale)));
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Marsaglia & Marsaglia's evaluation of the case-0 Anderson-Darling
// distribution: asymptotic CDF plus the finite-n correction.
inline double ad_asymptotic_cdf(double z) {
  if (z < 2.0) {
    return std::exp(-1.2337141 / z) / std::sqrt(z) *
           (2.00012 +
            (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z) * z);
  }
  return std::exp(
      -std::exp(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z));
}

inline double ad_errfix(int n, double x) {
  if (x > 0.8) {
    return (-130.2137 + (745.2337 - (1705.091 - (1950.646 - (1116.360 - 255.7844 * x) * x) * x) * x) * x) /
           n;
  }
  const double c = 0.01265 + 0.1757 / n;
  if (x < c) {
    double t = x / c;
    t = std::sqrt(t) * (1.0 - t) * (49 * t - 102);
    return t * (0.0037 / (static_cast<double>(n) * n) + 0.00078 / n + 0.00006) / n;
  }
  double t = (x - c) / (0.8 - c);
  t = -0.00022633 + (6.54034 - (14.6538 - (14.458 - (8.259 - 1.91864 * t) * t) * t) * t) * t;
  return t * (0.04213 + 0.01365 / n) / n;
}

// p-value of the Anderson-Darling statistic for a fully specified standard
// normal (values must already be standardized).
inline double anderson_darling_pvalue(std::vector<double> z) {
  const int n = static_cast<int>(z.size());
  std::sort(z.begin(), z.end());
  double a2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double fi = std_normal_cdf(z[i]);
    const double fj = std_normal_cdf(z[n - 1 - i]);
    a2 += (2.0 * i + 1.0) * (std::log(fi) + std::log1p(-fj));
  }
  a2 = -n - a2 / n;
  const double cdf = std::min(1.0, std::max(0.0, ad_asymptotic_cdf(a2) + ad_errfix(n, ad_asymptotic_cdf(a2))));
  return 1.0 - cdf;
}

// Asymptotic two-sample Kolmogorov-Smirnov p-value.
inline double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t n1 = a.size(), n2 = b.size();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < n1 && j < n2) {
    const double x = std::min(a[i], b[j]);
    while (i < n1 && a[i] <= x) ++i;
    while (j < n2 && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
  }
  const double ne = static_cast<double>(n1) * n2 / (n1 + n2);
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    q += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::min(1.0, std::max(0.0, q));
}

}  // namespace testutil
