#include "spdddpm/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "spdddpm/adam.hpp"
#include "spdddpm/csv.hpp"
#include "spdddpm/parallel.hpp"

namespace spdddpm {

using nlohmann::json;

SpdMatrix forward_step(const SpdMatrix& x_prev, int t, const SpdMatrix& eps,
                       const NoiseSchedule& s) {
  if (x_prev.dim() != eps.dim()) throw DimensionMismatchError("forward_step: dim mismatch");
  const Matrix half = mat_pow(x_prev, 0.5 * s.alpha(t)).mat();
  return group_action(mat_pow(eps, s.beta(t)), half);
}

SpdMatrix forward_jump(const SpdMatrix& x0, int t, const SpdMatrix& eps, const NoiseSchedule& s) {
  if (x0.dim() != eps.dim()) throw DimensionMismatchError("forward_jump: dim mismatch");
  return oplus(odot(s.alpha_bar(t), x0), odot(s.beta_bar(t), eps));
}

PosteriorParams posterior_params(const SpdMatrix& x_t, const SpdMatrix& eps, int t,
                                 const NoiseSchedule& s) {
  if (x_t.dim() != eps.dim()) throw DimensionMismatchError("posterior_params: dim mismatch");
  const double a = s.alpha(t);
  const double b = s.beta(t);
  const double bb = s.beta_bar(t);
  SpdMatrix mean = ominus(odot(1.0 / a, x_t), odot(b * b / (a * bb), eps));
  return PosteriorParams{std::move(mean), s.sigma_tilde(t)};
}

double training_loss(const SpdMatrix& eps, const SpdMatrix& eps_pred, Metric metric) {
  const double d = metric == Metric::affine ? dist_affine(eps, eps_pred)
                                            : dist_frobenius(eps, eps_pred);
  return d * d;
}

void SamplerConfig::validate() const {
  if (!(gamma > 0.0)) throw ConfigError("SamplerConfig: gamma must be positive");
  if (n_samples < 1) throw ConfigError("SamplerConfig: n_samples must be >= 1");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("TrainConfig: learning_rate must be positive");
  if (cond_dropout < 0.0 || cond_dropout >= 1.0) {
    throw ConfigError("TrainConfig: cond_dropout must be in [0, 1)");
  }
}

namespace {

/// Training loss as a tape node: d(eps, out)^2 under the metric.
int loss_node(ad::Tape& tape, int out, const SpdMatrix& eps, Metric metric) {
  if (metric == Metric::affine) {
    const int whiten = tape.constant(mat_inv_sqrt(eps).mat());
    return tape.frob_sq(tape.matlog(tape.bimap(whiten, out)));
  }
  return tape.frob_sq(tape.lincomb(1.0, out, -1.0, tape.constant(eps.mat())));
}

struct TrainExample {
  const SpdMatrix* x0;
  const Vector* y;  // null when unconditional (or dropped)
};

TrainResult train_core(const std::vector<TrainExample>& examples, SpdUNet& net,
                       const NoiseSchedule& s, const TrainConfig& cfg, Rng& rng,
                       bool conditional) {
  cfg.validate();
  const int m = net.spec().input_dim;
  if (examples.empty()) throw ConfigError("train: empty dataset");
  for (const TrainExample& e : examples) {
    if (e.x0->dim() != m) throw DimensionMismatchError("train: sample dim does not match net");
    if (conditional && e.y->size() != net.spec().cond_width) {
      throw BadConditionError("train: predictor length does not match net cond_width");
    }
  }
  const long n = static_cast<long>(examples.size());
  const long steps_per_epoch = n / cfg.batch_size;
  if (steps_per_epoch < 1) {
    throw ConfigError("train: batch_size exceeds the dataset size");
  }
  const long total_steps = static_cast<long>(cfg.epochs) * steps_per_epoch;

  AdamState adam(net.param_ptrs(), AdamConfig{});
  const int n_params = net.n_params();
  const std::uint64_t base_seed = rng();
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  const EigenSamplerConfig noise_cfg;
  long global_step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (long bstep = 0; bstep < steps_per_epoch; ++bstep) {
      const std::size_t offset = static_cast<std::size_t>(bstep) * cfg.batch_size;
      const int b = cfg.batch_size;
      std::vector<std::vector<Matrix>> grads(b);
      std::vector<double> losses(b);
      parallel_for(static_cast<std::size_t>(b), [&](std::size_t i) {
        const TrainExample& ex = examples[order[offset + i]];
        Rng erng = make_rng(base_seed,
                            static_cast<std::uint64_t>(global_step) * cfg.batch_size + i);
        std::uniform_int_distribution<int> t_dist(1, s.T());
        const int t = t_dist(erng);
        const Vector* y = nullptr;
        if (conditional) {
          std::uniform_real_distribution<double> unif(0.0, 1.0);
          y = unif(erng) < cfg.cond_dropout ? nullptr : ex.y;
        }
        const SpdMatrix eps = sample_standard(1.0, m, noise_cfg, erng);
        const SpdMatrix x_t = forward_jump(*ex.x0, t, eps, s);
        ad::Tape tape;
        std::vector<int> param_nodes;
        const int out = net.build_forward(tape, x_t.mat(), t, y, &param_nodes);
        const int loss = loss_node(tape, out, eps, cfg.loss_metric);
        tape.backward(loss);
        losses[i] = tape.value(loss)(0, 0);
        grads[i].reserve(param_nodes.size());
        for (int id : param_nodes) grads[i].push_back(tape.grad(id));
      });
      std::vector<Matrix> mean_grads;
      mean_grads.reserve(n_params);
      for (int k = 0; k < n_params; ++k) {
        Matrix acc = grads[0][static_cast<std::size_t>(k)];
        for (int i = 1; i < b; ++i) acc += grads[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        mean_grads.push_back(acc / static_cast<double>(b));
      }
      const double mean_loss =
          std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(b);
      if (!std::isfinite(mean_loss)) {
        throw ConvergenceError("train: non-finite loss");
      }
      adam.step(mean_grads, cosine_lr(cfg.learning_rate, global_step, total_steps));
      ++global_step;
      epoch_loss += mean_loss;
      result.trace.push_back(LossRecord{epoch, static_cast<int>(global_step), mean_loss});
    }
    result.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(steps_per_epoch));
  }
  return result;
}

/// One full reverse chain (Algorithm 2 / inner loop of Algorithm 4).
SpdMatrix reverse_chain(const SpdUNet& net, const NoiseSchedule& s, const Vector* y, double gamma,
                        Rng& rng) {
  const int m = net.spec().input_dim;
  const EigenSamplerConfig noise_cfg;
  SpdMatrix x = sample_standard(1.0, m, noise_cfg, rng);
  for (int t = s.T(); t >= 1; --t) {
    const SpdMatrix z = sample_standard(1.0, m, noise_cfg, rng);
    try {
      const SpdMatrix eps_pred = net.forward(x, t, y);
      const double bb = s.beta_bar(t);
      const SpdMatrix mean =
          odot(1.0 / s.alpha(t), ominus(x, odot(s.beta(t) * s.beta(t) / bb, eps_pred)));
      x = validate_spd(oplus(mean, odot(s.sigma_tilde(t) / gamma, z)).mat());
    } catch (const ChainDivergedError&) {
      throw;
    } catch (const Error& e) {
      std::ostringstream os;
      os << "reverse chain failed SPD validation at t = " << t << ": " << e.what();
      throw ChainDivergedError(os.str(), t);
    }
  }
  return x;
}

}  // namespace

TrainResult train_unconditional(const std::vector<SpdMatrix>& data, SpdUNet& net,
                                const NoiseSchedule& s, const TrainConfig& cfg, Rng& rng) {
  if (net.spec().cond_width != 0) {
    throw ConfigError("train_unconditional: net expects a condition vector");
  }
  std::vector<TrainExample> examples;
  examples.reserve(data.size());
  for (const SpdMatrix& x : data) examples.push_back(TrainExample{&x, nullptr});
  return train_core(examples, net, s, cfg, rng, false);
}

TrainResult train_conditional(const std::vector<ConditionedSample>& data, SpdUNet& net,
                              const NoiseSchedule& s, const TrainConfig& cfg, Rng& rng) {
  if (net.spec().cond_width <= 0) {
    throw ConfigError("train_conditional: net has no condition slot");
  }
  std::vector<TrainExample> examples;
  examples.reserve(data.size());
  for (const ConditionedSample& r : data) {
    if (r.predictors.size() != net.spec().cond_width) {
      throw BadConditionError("train_conditional: inconsistent predictor length");
    }
    examples.push_back(TrainExample{&r.matrix, &r.predictors});
  }
  return train_core(examples, net, s, cfg, rng, true);
}

SpdMatrix sample_unconditional(const SpdUNet& net, const NoiseSchedule& s,
                               const SamplerConfig& cfg, Rng& rng) {
  cfg.validate();
  return reverse_chain(net, s, nullptr, cfg.gamma, rng);
}

PredictResult predict_conditional(const SpdUNet& net, const NoiseSchedule& s, const Vector& y,
                                  const SamplerConfig& cfg, const FrechetConfig& frechet_cfg,
                                  Rng& rng) {
  cfg.validate();
  frechet_cfg.validate();
  const std::uint64_t base_seed = rng();
  std::vector<std::optional<SpdMatrix>> chains(static_cast<std::size_t>(cfg.n_samples));
  parallel_for(chains.size(), [&](std::size_t i) {
    Rng crng = make_rng(base_seed, i);
    chains[i] = reverse_chain(net, s, &y, cfg.gamma, crng);
  });
  std::vector<SpdMatrix> samples;
  samples.reserve(chains.size());
  for (const auto& c : chains) samples.push_back(*c);
  FrechetResult fr = frechet_mean(samples, frechet_cfg);
  return PredictResult{std::move(fr.mean), fr.converged, fr.grad_norm, fr.objective,
                       std::move(samples)};
}

namespace {

json spec_to_json(const UNetSpec& spec) {
  return json{{"input_dim", spec.input_dim},
              {"cond_width", spec.cond_width},
              {"time_embed_width", spec.time_embed_width},
              {"injector_hidden", spec.injector_hidden},
              {"stage_dims", spec.stage_dims},
              {"reeig_floor", spec.reeig_floor}};
}

UNetSpec spec_from_json(const json& j) {
  UNetSpec spec;
  spec.input_dim = j.at("input_dim").get<int>();
  spec.cond_width = j.at("cond_width").get<int>();
  spec.time_embed_width = j.at("time_embed_width").get<int>();
  spec.injector_hidden = j.at("injector_hidden").get<int>();
  const auto dims = j.at("stage_dims").get<std::vector<int>>();
  if (dims.size() != 3) throw ConfigError("checkpoint: stage_dims must have 3 entries");
  std::copy(dims.begin(), dims.end(), spec.stage_dims.begin());
  spec.reeig_floor = j.at("reeig_floor").get<double>();
  spec.validate();
  return spec;
}

}  // namespace

Checkpoint make_checkpoint(const SpdUNet& net, const NoiseSchedule& s) {
  Checkpoint ckpt;
  ckpt.m = net.spec().input_dim;
  ckpt.T = s.T();
  ckpt.spec = net.spec();
  ckpt.params = net.flatten_params();
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  json doc{{"format_version", ckpt.format_version},
           {"m", ckpt.m},
           {"T", ckpt.T},
           {"schedule_rule", ckpt.schedule_rule},
           {"network", spec_to_json(ckpt.spec)},
           {"params", ckpt.params}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot open checkpoint file for writing: " + path);
  out << doc.dump() << "\n";
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what(), 0);
  }
  try {
    Checkpoint ckpt;
    ckpt.format_version = doc.at("format_version").get<int>();
    if (ckpt.format_version != 1) {
      throw ConfigError("checkpoint: unsupported format_version");
    }
    ckpt.m = doc.at("m").get<int>();
    ckpt.T = doc.at("T").get<int>();
    ckpt.schedule_rule = doc.at("schedule_rule").get<std::string>();
    if (ckpt.schedule_rule != kScheduleRuleId) {
      throw ConfigError("checkpoint: unknown schedule rule '" + ckpt.schedule_rule + "'");
    }
    ckpt.spec = spec_from_json(doc.at("network"));
    if (ckpt.spec.input_dim != ckpt.m) {
      throw ConfigError("checkpoint: m does not match network input_dim");
    }
    ckpt.params = doc.at("params").get<std::vector<std::vector<double>>>();
    return ckpt;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what(), 0);
  }
}

SpdUNet net_from_checkpoint(const Checkpoint& ckpt) { return SpdUNet(ckpt.spec, ckpt.params); }

void write_loss_csv(const std::string& path, const std::vector<LossRecord>& trace) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open loss csv for writing: " + path);
  out << "epoch,step,loss\n";
  for (const LossRecord& r : trace) {
    out << r.epoch << "," << r.step << "," << format_double(r.loss) << "\n";
  }
  if (!out) throw IoError("failed writing loss csv: " + path);
}

}  // namespace spdddpm
