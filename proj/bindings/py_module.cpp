#include <cstdint>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spdddpm/dataset.hpp"
#include "spdddpm/diffusion.hpp"

namespace py = pybind11;
using namespace spdddpm;

namespace {

SpdMatrix as_spd(const Matrix& m) { return validate_spd(m); }

std::vector<SpdMatrix> as_spd_list(const std::vector<Matrix>& ms) {
  std::vector<SpdMatrix> out;
  out.reserve(ms.size());
  for (const Matrix& m : ms) out.push_back(as_spd(m));
  return out;
}

}  // namespace

PYBIND11_MODULE(_spdddpm, mod) {
  mod.doc() = "Denoising diffusion on the SPD manifold";

  py::register_exception<Error>(mod, "SpdError");

  mod.def("validate_spd",
          [](const Matrix& m, double floor) { return validate_spd(m, floor).mat(); },
          py::arg("matrix"), py::arg("spd_floor") = kDefaultSpdFloor,
          "Validates symmetry and positive definiteness; returns the matrix.");
  mod.def("oplus", [](const Matrix& a, const Matrix& b) { return oplus(as_spd(a), as_spd(b)).mat(); });
  mod.def("ominus",
          [](const Matrix& a, const Matrix& b) { return ominus(as_spd(a), as_spd(b)).mat(); });
  mod.def("odot", [](double a, const Matrix& x) { return odot(a, as_spd(x)).mat(); });
  mod.def("group_action",
          [](const Matrix& x, const Matrix& a) { return group_action(as_spd(x), a).mat(); });
  mod.def("mat_log", [](const Matrix& x) { return mat_log(as_spd(x)).mat(); });
  mod.def("mat_exp", [](const Matrix& s) { return mat_exp(SymmetricMatrix(s)).mat(); });
  mod.def("mat_sqrt", [](const Matrix& x) { return mat_sqrt(as_spd(x)).mat(); });
  mod.def("mat_pow", [](const Matrix& x, double a) { return mat_pow(as_spd(x), a).mat(); });
  mod.def("dist_affine",
          [](const Matrix& a, const Matrix& b) { return dist_affine(as_spd(a), as_spd(b)); });
  mod.def("dist_frobenius",
          [](const Matrix& a, const Matrix& b) { return dist_frobenius(as_spd(a), as_spd(b)); });
  mod.def("volume_density", [](const Matrix& x) { return volume_density(as_spd(x)); });

  mod.def("normalizer_zeta", &normalizer_zeta, py::arg("sigma"), py::arg("m"));
  mod.def("radial_cdf", &radial_cdf, py::arg("sigma"), py::arg("m"), py::arg("rho"));
  mod.def(
      "sample_gaussian",
      [](const Matrix& mean, double sigma, int n, std::uint64_t seed) {
        const RiemannianGaussian g(as_spd(mean), sigma);
        Rng rng = make_rng(seed);
        std::vector<Matrix> out;
        out.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) out.push_back(sample(g, {}, rng).mat());
        return out;
      },
      py::arg("mean"), py::arg("sigma"), py::arg("n") = 1, py::arg("seed") = 7,
      "Independent draws from G(mean, sigma^2).");

  mod.def(
      "frechet_mean",
      [](const std::vector<Matrix>& samples) { return frechet_mean(as_spd_list(samples)).mean.mat(); },
      py::arg("samples"));

  mod.def(
      "schedule_arrays",
      [](int T) {
        const NoiseSchedule s(T);
        py::dict d;
        std::vector<double> alpha, beta, alpha_bar, beta_bar, sigma_tilde;
        for (int t = 1; t <= T; ++t) {
          alpha.push_back(s.alpha(t));
          beta.push_back(s.beta(t));
          alpha_bar.push_back(s.alpha_bar(t));
          beta_bar.push_back(s.beta_bar(t));
          sigma_tilde.push_back(s.sigma_tilde(t));
        }
        d["alpha"] = alpha;
        d["beta"] = beta;
        d["alpha_bar"] = alpha_bar;
        d["beta_bar"] = beta_bar;
        d["sigma_tilde"] = sigma_tilde;
        return d;
      },
      py::arg("T"), "Schedule coefficients for t = 1..T.");

  mod.def(
      "forward_jump",
      [](const Matrix& x0, int t, const Matrix& eps, int T) {
        return forward_jump(as_spd(x0), t, as_spd(eps), NoiseSchedule(T)).mat();
      },
      py::arg("x0"), py::arg("t"), py::arg("eps"), py::arg("T"));

  mod.def(
      "train_unconditional",
      [](const std::vector<Matrix>& data, int T, int epochs, int batch_size, double lr,
         const std::string& checkpoint_path, std::uint64_t seed) {
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.learning_rate = lr;
        const std::vector<SpdMatrix> mats = as_spd_list(data);
        const int m = static_cast<int>(mats.front().dim());
        const NoiseSchedule s(T);
        Rng rng = make_rng(seed);
        SpdUNet net(UNetSpec::for_dim(m), rng);
        const TrainResult result = train_unconditional(mats, net, s, cfg, rng);
        save_checkpoint(checkpoint_path, make_checkpoint(net, s));
        return result.epoch_mean_loss;
      },
      py::arg("data"), py::arg("T"), py::arg("epochs"), py::arg("batch_size"),
      py::arg("learning_rate"), py::arg("checkpoint_path"), py::arg("seed") = 7,
      "Trains the noise predictor, writes a checkpoint, returns epoch mean losses.");

  mod.def(
      "sample_unconditional",
      [](const std::string& checkpoint_path, int n, double gamma, std::uint64_t seed) {
        const Checkpoint ckpt = load_checkpoint(checkpoint_path);
        const SpdUNet net = net_from_checkpoint(ckpt);
        const NoiseSchedule s(ckpt.T);
        SamplerConfig cfg;
        cfg.gamma = gamma;
        Rng rng = make_rng(seed);
        std::vector<Matrix> out;
        out.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) out.push_back(sample_unconditional(net, s, cfg, rng).mat());
        return out;
      },
      py::arg("checkpoint_path"), py::arg("n") = 1, py::arg("gamma") = 10.0, py::arg("seed") = 7,
      "Reverse chains from a stored checkpoint.");

  mod.def(
      "save_dataset",
      [](const std::string& path, const std::vector<Matrix>& mats) {
        Dataset d;
        d.reserve(mats.size());
        for (const Matrix& m : mats) d.push_back(MatrixRecord{as_spd(m), std::nullopt});
        save_dataset(path, d);
      },
      py::arg("path"), py::arg("matrices"));
  mod.def(
      "load_dataset",
      [](const std::string& path, double diag_load) {
        std::vector<Matrix> out;
        for (const MatrixRecord& r : load_dataset(path, diag_load)) out.push_back(r.matrix.mat());
        return out;
      },
      py::arg("path"), py::arg("diag_load") = 0.0);
}
