#pragma once

#include <vector>

#include "spdddpm/spd_matrix.hpp"

namespace spdddpm {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed list of parameter matrices.
class AdamState {
 public:
  AdamState(std::vector<Matrix*> params, AdamConfig cfg = {});

  /// One update at the given learning rate; grads align with the parameter
  /// list passed at construction.
  void step(const std::vector<Matrix>& grads, double lr);

  [[nodiscard]] long steps_taken() const { return t_; }

 private:
  std::vector<Matrix*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  AdamConfig cfg_;
  long t_ = 0;
};

/// Cosine decay from base_lr at step 0 toward 0 at total_steps.
double cosine_lr(double base_lr, long step_index, long total_steps);

}  // namespace spdddpm
