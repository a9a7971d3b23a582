#pragma once

#include <string>
#include <vector>

#include "spdddpm/errors.hpp"

namespace spdddpm {

/// Identifier of the rule alpha_t = sqrt(1 - 0.08 t / T), stored in
/// checkpoints so loaders can reject schedules they do not implement.
inline constexpr const char* kScheduleRuleId = "alpha2-linear-0.08";

/// Forward-process coefficients for t = 1..T:
///   alpha_t = sqrt(1 - 0.08 t/T), beta_t = sqrt(0.08 t/T),
///   alpha_bar_t = prod_{i<=t} alpha_i, beta_bar_t = sqrt(1 - alpha_bar_t^2),
///   sigma_tilde_t = beta_bar_{t-1} beta_t / beta_bar_t (beta_bar_0 = 0).
class NoiseSchedule {
 public:
  explicit NoiseSchedule(int T);

  [[nodiscard]] int T() const { return T_; }
  [[nodiscard]] double alpha(int t) const { return alpha_[check(t)]; }
  [[nodiscard]] double beta(int t) const { return beta_[check(t)]; }
  [[nodiscard]] double alpha_bar(int t) const { return alpha_bar_[check(t)]; }
  /// Defined for t in [0, T]; beta_bar(0) = 0.
  [[nodiscard]] double beta_bar(int t) const;
  [[nodiscard]] double sigma_tilde(int t) const { return sigma_tilde_[check(t)]; }

 private:
  int check(int t) const;
  int T_;
  std::vector<double> alpha_, beta_, alpha_bar_, beta_bar_, sigma_tilde_;
};

NoiseSchedule build_schedule(int T);

}  // namespace spdddpm
