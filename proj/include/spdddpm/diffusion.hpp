#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spdddpm/frechet.hpp"
#include "spdddpm/gaussian.hpp"
#include "spdddpm/metric.hpp"
#include "spdddpm/schedule.hpp"
#include "spdddpm/spd_matrix.hpp"
#include "spdddpm/unet.hpp"

namespace spdddpm {

/// One forward noising step (Eq. 18): X_prev^{a/2} eps^{b} X_prev^{a/2}.
SpdMatrix forward_step(const SpdMatrix& x_prev, int t, const SpdMatrix& eps,
                       const NoiseSchedule& s);

/// Direct jump to step t (Eq. 20): alpha_bar_t (.) X0 (+) beta_bar_t (.) eps.
SpdMatrix forward_jump(const SpdMatrix& x0, int t, const SpdMatrix& eps, const NoiseSchedule& s);

struct PosteriorParams {
  SpdMatrix mean;
  double sigma;
};

/// q(X_{t-1} | X_t, X_0) parameters written in terms of the mixed-in noise:
/// mean = (1/alpha_t) (.) X_t (-) (beta_t^2/(alpha_t beta_bar_t)) (.) eps,
/// sigma = sigma_tilde_t.
PosteriorParams posterior_params(const SpdMatrix& x_t, const SpdMatrix& eps, int t,
                                 const NoiseSchedule& s);

/// d(eps, eps_pred)^2 under the chosen metric.
double training_loss(const SpdMatrix& eps, const SpdMatrix& eps_pred, Metric metric);

struct SamplerConfig {
  double gamma = 10.0;
  int n_samples = 20;

  void validate() const;
};

struct TrainConfig {
  int epochs = 50;
  int batch_size = 150;
  double learning_rate = 0.0015;  // cosine-decayed per optimizer step
  Metric loss_metric = Metric::affine;
  double cond_dropout = 0.1;  // conditional mode only

  void validate() const;
};

struct LossRecord {
  int epoch;  // 1-based
  int step;   // global optimizer step, 1-based
  double loss;
};

struct TrainResult {
  std::vector<LossRecord> trace;
  std::vector<double> epoch_mean_loss;
};

/// Algorithm 1.  Batches are drawn by shuffling each epoch and taking
/// floor(n / batch_size) full batches; per-example gradients are averaged.
TrainResult train_unconditional(const std::vector<SpdMatrix>& data, SpdUNet& net,
                                const NoiseSchedule& s, const TrainConfig& cfg, Rng& rng);

/// Algorithm 2.  z and X_T are exact G(I,1) draws; the noise scale at each
/// step is sigma_tilde_t / gamma, vanishing at t = 1.
SpdMatrix sample_unconditional(const SpdUNet& net, const NoiseSchedule& s,
                               const SamplerConfig& cfg, Rng& rng);

struct ConditionedSample {
  SpdMatrix matrix;
  Vector predictors;
};

/// Algorithm 3: as Algorithm 1 with the predictor vector injected; with
/// probability cfg.cond_dropout the condition is replaced by the null token.
TrainResult train_conditional(const std::vector<ConditionedSample>& data, SpdUNet& net,
                              const NoiseSchedule& s, const TrainConfig& cfg, Rng& rng);

struct PredictResult {
  SpdMatrix estimate;
  bool frechet_converged;
  double frechet_grad_norm;
  double objective;
  std::vector<SpdMatrix> samples;
};

/// Algorithm 4: cfg.n_samples conditional reverse chains, then the Fréchet
/// mean of the outputs as the estimate of E(X | y).
PredictResult predict_conditional(const SpdUNet& net, const NoiseSchedule& s, const Vector& y,
                                  const SamplerConfig& cfg, const FrechetConfig& frechet_cfg,
                                  Rng& rng);

/// Versioned checkpoint document covering schedule + network.
struct Checkpoint {
  int format_version = 1;
  int m = 0;
  int T = 0;
  std::string schedule_rule = kScheduleRuleId;
  UNetSpec spec;
  std::vector<std::vector<double>> params;
};

Checkpoint make_checkpoint(const SpdUNet& net, const NoiseSchedule& s);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);
SpdUNet net_from_checkpoint(const Checkpoint& ckpt);

/// CSV with header epoch,step,loss; one row per optimizer step.
void write_loss_csv(const std::string& path, const std::vector<LossRecord>& trace);

}  // namespace spdddpm
