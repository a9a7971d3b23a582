#include "spdddpm/adam.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace spdddpm {

AdamState::AdamState(std::vector<Matrix*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Matrix* p : params_) {
    m_.push_back(Matrix::Zero(p->rows(), p->cols()));
    v_.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
}

void AdamState::step(const std::vector<Matrix>& grads, double lr) {
  if (grads.size() != params_.size()) {
    throw ShapeMismatchError("AdamState: gradient list length mismatch");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const Matrix& g = grads[k];
    if (g.rows() != params_[k]->rows() || g.cols() != params_[k]->cols()) {
      throw ShapeMismatchError("AdamState: gradient shape mismatch");
    }
    m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * g;
    v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    const Matrix mhat = m_[k] / bc1;
    const Matrix vhat = v_[k] / bc2;
    params_[k]->array() -= lr * mhat.array() / (vhat.array().sqrt() + cfg_.eps);
  }
}

double cosine_lr(double base_lr, long step_index, long total_steps) {
  if (total_steps <= 1) return base_lr;
  const double frac = static_cast<double>(step_index) / static_cast<double>(total_steps);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace spdddpm
