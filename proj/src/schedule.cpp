#include "spdddpm/schedule.hpp"

#include <cmath>
#include <sstream>

namespace spdddpm {

NoiseSchedule::NoiseSchedule(int T) : T_(T) {
  if (T < 1) throw ConfigError("NoiseSchedule: T must be >= 1");
  alpha_.resize(T);
  beta_.resize(T);
  alpha_bar_.resize(T);
  beta_bar_.resize(T);
  sigma_tilde_.resize(T);
  double prod = 1.0;
  for (int t = 1; t <= T; ++t) {
    const double frac = 0.08 * static_cast<double>(t) / static_cast<double>(T);
    alpha_[t - 1] = std::sqrt(1.0 - frac);
    beta_[t - 1] = std::sqrt(frac);
    prod *= alpha_[t - 1];
    alpha_bar_[t - 1] = prod;
    beta_bar_[t - 1] = std::sqrt(1.0 - prod * prod);
  }
  for (int t = 1; t <= T; ++t) {
    sigma_tilde_[t - 1] = beta_bar(t - 1) * beta_[t - 1] / beta_bar_[t - 1];
  }
}

int NoiseSchedule::check(int t) const {
  if (t < 1 || t > T_) {
    std::ostringstream os;
    os << "NoiseSchedule: t = " << t << " outside [1, " << T_ << "]";
    throw ConfigError(os.str());
  }
  return t - 1;
}

double NoiseSchedule::beta_bar(int t) const {
  if (t == 0) return 0.0;
  return beta_bar_[check(t)];
}

NoiseSchedule build_schedule(int T) { return NoiseSchedule(T); }

}  // namespace spdddpm
