#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "spdddpm/dataset.hpp"
#include "spdddpm/diffusion.hpp"
#include "spdddpm/parallel.hpp"
#include "spdddpm/verify.hpp"

namespace {

using namespace spdddpm;

constexpr std::uint64_t kDefaultSeed = 7;

struct CliFailure {
  int code;
  std::string message;
};

/// Runs a loading step; any library error during it is a data error (exit 2).
template <class F>
auto data_phase(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw CliFailure{2, e.what()};
  }
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw CliFailure{1, "cannot parse number '" + item + "'"};
    }
    if (used != item.size()) throw CliFailure{1, "cannot parse number '" + item + "'"};
    out.push_back(v);
  }
  if (out.empty()) throw CliFailure{1, "expected a comma-separated list of numbers"};
  return out;
}

void announce_seed(std::uint64_t seed) { std::cout << "seed " << seed << "\n"; }

struct GenToyArgs {
  int dim = 3;
  double sigma = 0.1;
  int count = 500;
  std::string out = "toy.jsonl";
  std::string center_out = "center.json";
  std::uint64_t seed = kDefaultSeed;
  EigenSamplerConfig sampler;
  double proposal_std = -1.0;
};

int run_gen_toy(GenToyArgs& a) {
  if (a.proposal_std > 0.0) a.sampler.proposal_std = a.proposal_std;
  a.sampler.validate();
  announce_seed(a.seed);
  Rng rng = make_rng(a.seed);
  const SpdMatrix center = random_toy_center(a.dim, rng);
  ToySpec spec{center, a.sigma, a.count};
  spec.validate();
  const Dataset data = generate_toy(spec, a.sampler, rng);
  save_matrix_json(a.center_out, center);
  save_dataset(a.out, data);
  std::cout << "wrote " << data.size() << " records to " << a.out << "\n";
  std::cout << "wrote center to " << a.center_out << "\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  int T = 200;
  int epochs = -1;
  int batch_size = -1;
  double lr = 0.0015;
  std::string metric = "affine";
  double cond_dropout = 0.1;
  bool conditional = false;
  double diag_load = 0.0;
  std::string checkpoint = "model.json";
  std::string loss_csv = "loss.csv";
  std::uint64_t seed = kDefaultSeed;
};

int run_train(TrainArgs& a) {
  TrainConfig cfg;
  cfg.epochs = a.epochs > 0 ? a.epochs : (a.conditional ? 20 : 50);
  cfg.batch_size = a.batch_size > 0 ? a.batch_size : (a.conditional ? 100 : 150);
  cfg.learning_rate = a.lr;
  cfg.loss_metric = parse_metric(a.metric);
  cfg.cond_dropout = a.cond_dropout;
  cfg.validate();
  if (a.T < 1) throw ConfigError("train: --T must be >= 1");
  announce_seed(a.seed);

  const Dataset dataset = data_phase([&] { return load_dataset(a.data, a.diag_load); });
  if (dataset.empty()) throw CliFailure{2, "train: dataset is empty"};
  const int m = static_cast<int>(dataset.front().matrix.dim());

  const NoiseSchedule s(a.T);
  Rng rng = make_rng(a.seed);
  TrainResult result;
  if (a.conditional) {
    if (!dataset.front().predictors) {
      throw CliFailure{2, "train: --conditional requires predictors in every record"};
    }
    std::vector<ConditionedSample> samples;
    samples.reserve(dataset.size());
    for (const MatrixRecord& r : dataset) {
      if (!r.predictors) throw CliFailure{2, "train: record without predictors"};
      samples.push_back(ConditionedSample{r.matrix, *r.predictors});
    }
    const int cond_width = static_cast<int>(samples.front().predictors.size());
    SpdUNet net(UNetSpec::for_dim(m, cond_width), rng);
    result = train_conditional(samples, net, s, cfg, rng);
    save_checkpoint(a.checkpoint, make_checkpoint(net, s));
  } else {
    std::vector<SpdMatrix> matrices;
    matrices.reserve(dataset.size());
    for (const MatrixRecord& r : dataset) matrices.push_back(r.matrix);
    SpdUNet net(UNetSpec::for_dim(m), rng);
    result = train_unconditional(matrices, net, s, cfg, rng);
    save_checkpoint(a.checkpoint, make_checkpoint(net, s));
  }
  write_loss_csv(a.loss_csv, result.trace);
  std::cout << "trained " << (a.conditional ? "conditional" : "unconditional") << " model on "
            << dataset.size() << " records (dim " << m << ", T " << a.T << ")\n";
  if (!result.epoch_mean_loss.empty()) {
    std::cout << "first epoch mean loss " << result.epoch_mean_loss.front()
              << ", last epoch mean loss " << result.epoch_mean_loss.back() << "\n";
  }
  std::cout << "wrote checkpoint to " << a.checkpoint << "\n";
  std::cout << "wrote loss trace to " << a.loss_csv << "\n";
  return 0;
}

struct SampleArgs {
  std::string checkpoint = "model.json";
  int n = 100;
  double gamma = 10.0;
  std::string out = "samples.jsonl";
  std::uint64_t seed = kDefaultSeed;
};

int run_sample(SampleArgs& a) {
  SamplerConfig cfg;
  cfg.gamma = a.gamma;
  cfg.n_samples = a.n;
  cfg.validate();
  announce_seed(a.seed);
  const Checkpoint ckpt = data_phase([&] { return load_checkpoint(a.checkpoint); });
  const SpdUNet net = net_from_checkpoint(ckpt);
  const NoiseSchedule s(ckpt.T);
  Rng rng = make_rng(a.seed);
  const std::uint64_t base_seed = rng();
  std::vector<std::optional<SpdMatrix>> draws(static_cast<std::size_t>(a.n));
  parallel_for(draws.size(), [&](std::size_t i) {
    Rng crng = make_rng(base_seed, i);
    draws[i] = sample_unconditional(net, s, cfg, crng);
  });
  Dataset out;
  out.reserve(draws.size());
  for (auto& d : draws) out.push_back(MatrixRecord{std::move(*d), std::nullopt});
  save_dataset(a.out, out);
  std::cout << "wrote " << out.size() << " samples to " << a.out << "\n";
  return 0;
}

struct PredictArgs {
  std::string checkpoint = "model.json";
  std::string y;
  int n_samples = 20;
  double gamma = 10.0;
  std::string out = "predict.json";
  std::string heat_out;
  std::uint64_t seed = kDefaultSeed;
};

int run_predict(PredictArgs& a) {
  const std::vector<double> parsed = parse_number_list(a.y);
  Vector y(static_cast<Eigen::Index>(parsed.size()));
  for (std::size_t i = 0; i < parsed.size(); ++i) y[static_cast<Eigen::Index>(i)] = parsed[i];
  SamplerConfig cfg;
  cfg.gamma = a.gamma;
  cfg.n_samples = a.n_samples;
  cfg.validate();
  announce_seed(a.seed);
  const Checkpoint ckpt = data_phase([&] { return load_checkpoint(a.checkpoint); });
  if (ckpt.spec.cond_width == 0) {
    throw ConfigError("predict: checkpoint is unconditional; train with --conditional");
  }
  if (ckpt.spec.cond_width != y.size()) {
    throw BadConditionError("predict: --y length does not match the checkpoint's predictors");
  }
  const SpdUNet net = net_from_checkpoint(ckpt);
  const NoiseSchedule s(ckpt.T);
  Rng rng = make_rng(a.seed);
  const PredictResult result = predict_conditional(net, s, y, cfg, FrechetConfig{}, rng);
  save_matrix_json(a.out, result.estimate);
  if (!a.heat_out.empty()) export_heat_csv(result.estimate, a.heat_out);
  std::cout << "frechet mean over " << result.samples.size() << " chains: objective "
            << result.objective << ", converged " << (result.frechet_converged ? "yes" : "no")
            << "\n";
  std::cout << "wrote estimate to " << a.out << "\n";
  if (!a.heat_out.empty()) std::cout << "wrote heatmap to " << a.heat_out << "\n";
  return 0;
}

struct EvalArgs {
  std::string data = "samples.jsonl";
  std::string ref;
  std::string metric = "affine";
  std::string out = "metrics.csv";
  double diag_load = 0.0;
};

int run_eval(EvalArgs& a) {
  const Metric metric = parse_metric(a.metric);
  const Dataset dataset = data_phase([&] { return load_dataset(a.data, a.diag_load); });
  const SpdMatrix ref = data_phase([&] { return load_matrix_json(a.ref, a.diag_load); });
  std::vector<SpdMatrix> samples;
  samples.reserve(dataset.size());
  for (const MatrixRecord& r : dataset) samples.push_back(r.matrix);
  const MetricsReport report = data_phase([&] { return eval_mean_distance(samples, ref, metric); });
  write_metrics_csv(a.out, report);
  std::cout << "mean_affine_distance " << report.mean_affine_distance << "\n";
  std::cout << "mean_frobenius " << report.mean_frobenius << "\n";
  std::cout << "wrote metrics to " << a.out << "\n";
  return 0;
}

int run_checks(const char* label, const std::vector<verify::CheckResult>& results) {
  verify::print_results(std::cout, results);
  if (verify::all_passed(results)) {
    std::cout << label << ": all " << results.size() << " checks passed\n";
    return 0;
  }
  std::cout << label << ": FAILED\n";
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Denoising diffusion on the SPD manifold"};
  app.set_config("--config", "", "TOML config file; command-line flags win");
  app.set_version_flag("--version", "spdddpm 0.1.0");
  app.require_subcommand(1);

  GenToyArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-toy", "Generate a toy dataset from G(A, sigma^2)");
  gen_cmd->add_option("--dim", gen.dim, "Matrix dimension")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--sigma", gen.sigma, "Dispersion")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--count", gen.count, "Number of samples")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", gen.out, "Output dataset (JSON lines)");
  gen_cmd->add_option("--center-out", gen.center_out, "Where to write the generating center");
  gen_cmd->add_option("--seed", gen.seed, "RNG seed");
  gen_cmd->add_option("--mh-steps", gen.sampler.mh_steps, "Metropolis-Hastings steps per draw");
  gen_cmd->add_option("--burn-in", gen.sampler.burn_in, "Metropolis-Hastings burn-in");
  gen_cmd->add_option("--proposal-std", gen.proposal_std,
                      "Proposal standard deviation (default 0.5 sigma)");

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train the SPD U-Net noise predictor");
  train_cmd->add_option("--data", train.data, "Training dataset (JSON lines)")->required();
  train_cmd->add_option("--T", train.T, "Diffusion steps");
  train_cmd->add_option("--epochs", train.epochs, "Epochs (default 50, conditional 20)");
  train_cmd->add_option("--batch-size", train.batch_size,
                        "Batch size (default 150, conditional 100)");
  train_cmd->add_option("--lr", train.lr, "Base learning rate (cosine-decayed)");
  train_cmd->add_option("--metric", train.metric, "Loss metric: affine or frobenius");
  train_cmd->add_option("--cond-dropout", train.cond_dropout,
                        "Probability of dropping the condition");
  train_cmd->add_flag("--conditional", train.conditional, "Train with predictors");
  train_cmd->add_option("--diag-load", train.diag_load,
                        "Add diag_load * I to every input matrix before validation");
  train_cmd->add_option("--checkpoint", train.checkpoint, "Checkpoint output path");
  train_cmd->add_option("--loss-csv", train.loss_csv, "Loss trace output path");
  train_cmd->add_option("--seed", train.seed, "RNG seed");

  SampleArgs sample;
  CLI::App* sample_cmd = app.add_subcommand("sample", "Run reverse chains from a checkpoint");
  sample_cmd->add_option("--checkpoint", sample.checkpoint, "Checkpoint path");
  sample_cmd->add_option("--n", sample.n, "Number of samples")->check(CLI::PositiveNumber);
  sample_cmd->add_option("--gamma", sample.gamma, "Noise divisor gamma");
  sample_cmd->add_option("--out", sample.out, "Output dataset (JSON lines)");
  sample_cmd->add_option("--seed", sample.seed, "RNG seed");

  PredictArgs predict;
  CLI::App* predict_cmd =
      app.add_subcommand("predict", "Estimate E(X | y) via conditional chains + Frechet mean");
  predict_cmd->add_option("--checkpoint", predict.checkpoint, "Checkpoint path");
  predict_cmd->add_option("--y", predict.y, "Predictor values, comma separated")->required();
  predict_cmd->add_option("--n-samples", predict.n_samples, "Number of reverse chains")
      ->check(CLI::PositiveNumber);
  predict_cmd->add_option("--gamma", predict.gamma, "Noise divisor gamma");
  predict_cmd->add_option("--out", predict.out, "Estimate output path (JSON)");
  predict_cmd->add_option("--heat-out", predict.heat_out, "Optional heatmap CSV path");
  predict_cmd->add_option("--seed", predict.seed, "RNG seed");

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Mean distance of samples to a reference");
  eval_cmd->add_option("--data", eval.data, "Sample dataset (JSON lines)");
  eval_cmd->add_option("--ref", eval.ref, "Reference matrix (JSON)")->required();
  eval_cmd->add_option("--metric", eval.metric, "Per-sample metric: affine or frobenius");
  eval_cmd->add_option("--out", eval.out, "Metrics CSV path");
  eval_cmd->add_option("--diag-load", eval.diag_load,
                       "Add diag_load * I to every input matrix before validation");

  struct {
    int dim = 4;
    std::uint64_t seed = kDefaultSeed;
  } grad;
  CLI::App* grad_cmd =
      app.add_subcommand("grad-check", "Finite-difference validation of the gradient engine");
  grad_cmd->add_option("--dim", grad.dim, "Matrix dimension")->check(CLI::Range(2, 16));
  grad_cmd->add_option("--seed", grad.seed, "RNG seed");

  struct {
    int dim = 3;
    std::uint64_t seed = kDefaultSeed;
  } prop;
  CLI::App* prop_cmd =
      app.add_subcommand("prop-check", "Deterministic identity suite for the manifold math");
  prop_cmd->add_option("--dim", prop.dim, "Matrix dimension")->check(CLI::Range(2, 16));
  prop_cmd->add_option("--seed", prop.seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen_cmd->parsed()) return run_gen_toy(gen);
    if (train_cmd->parsed()) return run_train(train);
    if (sample_cmd->parsed()) return run_sample(sample);
    if (predict_cmd->parsed()) return run_predict(predict);
    if (eval_cmd->parsed()) return run_eval(eval);
    if (grad_cmd->parsed()) {
      announce_seed(grad.seed);
      return run_checks("grad-check", spdddpm::verify::gradient_checks(grad.dim, grad.seed));
    }
    if (prop_cmd->parsed()) {
      announce_seed(prop.seed);
      return run_checks("prop-check", spdddpm::verify::property_checks(prop.dim, prop.seed));
    }
  } catch (const CliFailure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const BadConditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const UnsupportedDimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InconsistentDimensionsError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NoPredictorsError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const EmptySampleSetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionMismatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
