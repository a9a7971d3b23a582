#include "spdddpm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <ostream>
#include <utility>

#include "spdddpm/diffusion.hpp"
#include "spdddpm/frechet.hpp"
#include "spdddpm/gaussian.hpp"
#include "spdddpm/schedule.hpp"
#include "spdddpm/spd_matrix.hpp"
#include "spdddpm/tape.hpp"
#include "spdddpm/unet.hpp"

namespace spdddpm::verify {

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kGradTol = 1e-4;

double normalized_error(double ad, double fd) {
  return std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
}

Matrix random_general(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

/// SPD with eigenvalues exp(linspace(lo, hi, d)): spectral gaps stay well
/// above the finite-difference step.
Matrix spread_spd(int d, Rng& rng, double lo = -0.7, double hi = 0.9) {
  Vector lambda(d);
  for (int i = 0; i < d; ++i) {
    const double u = d == 1 ? 0.5 : static_cast<double>(i) / (d - 1);
    lambda[i] = std::exp(lo + (hi - lo) * u);
  }
  const Matrix o = haar_orthogonal(d, rng);
  const Matrix m = o * lambda.asDiagonal() * o.transpose();
  return ((m + m.transpose()) * 0.5).eval();
}

struct Leaf {
  std::string label;
  Matrix value;
  bool symmetric;
};

using Builder = std::function<int(ad::Tape&, const std::vector<int>&)>;

/// Coordinates of one leaf to probe: all of them up to a cap, otherwise a
/// deterministic subsample.
std::vector<std::pair<int, int>> probe_coords(const Matrix& m, bool symmetric, std::size_t cap,
                                              Rng& rng) {
  std::vector<std::pair<int, int>> coords;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = symmetric ? i : 0; j < m.cols(); ++j) coords.emplace_back(i, j);
  if (coords.size() > cap) {
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(cap);
  }
  return coords;
}

void perturb(Matrix& m, int i, int j, bool symmetric, double h) {
  m(i, j) += h;
  if (symmetric && i != j) m(j, i) += h;
}

CheckResult check_op(const std::string& name, std::vector<Leaf> leaves, const Builder& build,
                     Rng& rng, std::size_t cap = 64) {
  std::vector<Matrix> grads;
  {
    ad::Tape tape;
    std::vector<int> ids;
    ids.reserve(leaves.size());
    for (const Leaf& l : leaves) ids.push_back(tape.param(l.value));
    const int out = build(tape, ids);
    tape.backward(out);
    for (int id : ids) grads.push_back(tape.grad(id));
  }
  auto evaluate = [&](const std::vector<Leaf>& ls) {
    ad::Tape tape;
    std::vector<int> ids;
    ids.reserve(ls.size());
    for (const Leaf& l : ls) ids.push_back(tape.param(l.value));
    return tape.value(build(tape, ids))(0, 0);
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    const Leaf& leaf = leaves[k];
    for (auto [i, j] : probe_coords(leaf.value, leaf.symmetric, cap, rng)) {
      const double analytic =
          leaf.symmetric && i != j ? grads[k](i, j) + grads[k](j, i) : grads[k](i, j);
      std::vector<Leaf> plus = leaves, minus = leaves;
      perturb(plus[k].value, i, j, leaf.symmetric, kFdStep);
      perturb(minus[k].value, i, j, leaf.symmetric, -kFdStep);
      const double fd = (evaluate(plus) - evaluate(minus)) / (2.0 * kFdStep);
      worst = std::max(worst, normalized_error(analytic, fd));
    }
  }
  return CheckResult{name, worst < kGradTol, worst, kGradTol};
}

/// Finite differences through the real training loss graph, perturbing the
/// network's own parameter storage.
CheckResult check_net_loss(const std::string& name, SpdUNet& net, const SpdMatrix& x_t, int t,
                           const Vector* y, const SpdMatrix& eps, Rng& rng, std::size_t cap) {
  const Matrix whiten = mat_inv_sqrt(eps).mat();
  auto loss_value = [&](ad::Tape& tape, std::vector<int>* param_nodes) {
    const int out = net.build_forward(tape, x_t.mat(), t, y, param_nodes);
    return tape.frob_sq(tape.matlog(tape.bimap(tape.constant(whiten), out)));
  };
  std::vector<Matrix> grads;
  {
    ad::Tape tape;
    std::vector<int> param_nodes;
    const int loss = loss_value(tape, &param_nodes);
    tape.backward(loss);
    for (int id : param_nodes) grads.push_back(tape.grad(id));
  }
  auto evaluate = [&] {
    ad::Tape tape;
    return tape.value(loss_value(tape, nullptr))(0, 0);
  };
  std::vector<Matrix*> params = net.param_ptrs();
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    for (auto [i, j] : probe_coords(p, false, cap, rng)) {
      const double saved = p(i, j);
      p(i, j) = saved + kFdStep;
      const double fplus = evaluate();
      p(i, j) = saved - kFdStep;
      const double fminus = evaluate();
      p(i, j) = saved;
      const double fd = (fplus - fminus) / (2.0 * kFdStep);
      worst = std::max(worst, normalized_error(grads[k](i, j), fd));
    }
  }
  return CheckResult{name, worst < kGradTol, worst, kGradTol};
}

int asym_head(ad::Tape& tape, int node, const Matrix& c) {
  return tape.frob_sq(tape.lincomb(1.0, node, -1.0, tape.constant(c)));
}

}  // namespace

std::vector<CheckResult> gradient_checks(int dim, std::uint64_t seed) {
  if (dim < 2) throw ConfigError("grad-check: dim must be >= 2");
  Rng rng = make_rng(seed);
  std::vector<CheckResult> results;

  const Matrix x_spd = spread_spd(dim, rng);
  const Matrix w_gen = random_general(dim, dim, rng);
  const Matrix c_asym = random_general(dim, dim, rng);

  results.push_back(check_op(
      "grad/bimap",
      {{"W", w_gen, false}, {"X", x_spd, true}},
      [&](ad::Tape& t, const std::vector<int>& v) {
        return asym_head(t, t.bimap(v[0], v[1]), c_asym);
      },
      rng));

  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(x_spd);
    const double floor = std::sqrt(es.eigenvalues()[0] * es.eigenvalues()[1]);
    results.push_back(check_op(
        "grad/reeig",
        {{"X", x_spd, true}},
        [&](ad::Tape& t, const std::vector<int>& v) {
          return asym_head(t, t.reeig(v[0], floor), c_asym);
        },
        rng));
  }

  results.push_back(check_op(
      "grad/matlog",
      {{"X", x_spd, true}},
      [&](ad::Tape& t, const std::vector<int>& v) { return asym_head(t, t.matlog(v[0]), c_asym); },
      rng));

  results.push_back(check_op(
      "grad/matpow",
      {{"X", x_spd, true}},
      [&](ad::Tape& t, const std::vector<int>& v) {
        return asym_head(t, t.matpow(v[0], 0.37), c_asym);
      },
      rng));

  results.push_back(check_op(
      "grad/lincomb",
      {{"A", random_general(dim, dim, rng), false}, {"B", random_general(dim, dim, rng), false}},
      [&](ad::Tape& t, const std::vector<int>& v) {
        return asym_head(t, t.lincomb(0.7, v[0], -1.3, v[1]), c_asym);
      },
      rng));

  results.push_back(check_op(
      "grad/affine-identity",
      {{"X", random_general(dim, dim, rng), false}},
      [&](ad::Tape& t, const std::vector<int>& v) {
        return asym_head(t, t.affine_identity(v[0], 0.5, 1.0), c_asym);
      },
      rng));

  results.push_back(check_op(
      "grad/tanh",
      {{"X", random_general(dim, dim, rng), false}},
      [&](ad::Tape& t, const std::vector<int>& v) {
        return asym_head(t, t.tanh_elem(v[0]), c_asym);
      },
      rng));

  results.push_back(check_op(
      "grad/embed-topleft",
      {{"X", spread_spd(dim - 1, rng), true}},
      [&](ad::Tape& t, const std::vector<int>& v) {
        return asym_head(t, t.embed_topleft(v[0], dim), c_asym);
      },
      rng));

  {
    const Matrix c_vec = random_general(5, 1, rng);
    results.push_back(check_op(
        "grad/dense-affine",
        {{"W", random_general(5, 3, rng), false},
         {"b", random_general(5, 1, rng), false},
         {"u", random_general(3, 1, rng), false}},
        [&](ad::Tape& t, const std::vector<int>& v) {
          return asym_head(t, t.dense_affine(v[0], v[1], v[2]), c_vec);
        },
        rng));
  }

  results.push_back(check_op(
      "grad/reshape-square",
      {{"v", random_general(dim * dim, 1, rng), false}},
      [&](ad::Tape& t, const std::vector<int>& v) {
        return asym_head(t, t.reshape_square(v[0], dim), c_asym);
      },
      rng));

  results.push_back(check_op(
      "grad/frob-sq",
      {{"X", random_general(dim, dim, rng), false}},
      [&](ad::Tape& t, const std::vector<int>& v) { return t.frob_sq(v[0]); }, rng));

  {
    const Matrix w1 = random_general(8, 6, rng) * 0.4;
    const Matrix b1 = random_general(8, 1, rng) * 0.2;
    const Matrix w2 = random_general(dim * dim, 8, rng) * 0.3;
    const Matrix b2 = random_general(dim * dim, 1, rng) * 0.2;
    const Matrix u = random_general(6, 1, rng);
    results.push_back(check_op(
        "grad/injector-path",
        {{"W1", w1, false}, {"b1", b1, false}, {"W2", w2, false}, {"b2", b2, false},
         {"X", x_spd, true}},
        [&](ad::Tape& t, const std::vector<int>& v) {
          const int h = t.tanh_elem(t.dense_affine(v[0], v[1], t.constant(u)));
          const int p = t.reshape_square(t.dense_affine(v[2], v[3], h), dim);
          const int e = t.affine_identity(t.tanh_elem(p), 0.5, 1.0);
          return asym_head(t, t.bimap(e, v[4]), c_asym);
        },
        rng));
  }

  {
    Rng init_rng = make_rng(seed, 101);
    SpdUNet net(UNetSpec::for_dim(dim), init_rng);
    std::normal_distribution<double> jitter(0.0, 0.05);
    for (Matrix* p : net.param_ptrs())
      for (Eigen::Index i = 0; i < p->size(); ++i) (*p)(i) += jitter(init_rng);
    const SpdMatrix x_t = validate_spd(spread_spd(dim, rng));
    const SpdMatrix eps = validate_spd(spread_spd(dim, rng, -0.4, 0.5));
    results.push_back(check_net_loss("grad/unet-affine-loss", net, x_t, 7, nullptr, eps, rng, 12));
  }

  {
    Rng init_rng = make_rng(seed, 202);
    SpdUNet net(UNetSpec::for_dim(3, 2), init_rng);
    std::normal_distribution<double> jitter(0.0, 0.05);
    for (Matrix* p : net.param_ptrs())
      for (Eigen::Index i = 0; i < p->size(); ++i) (*p)(i) += jitter(init_rng);
    Vector y(2);
    y << 0.3, -1.1;
    const SpdMatrix x_t = validate_spd(spread_spd(3, rng));
    const SpdMatrix eps = validate_spd(spread_spd(3, rng, -0.4, 0.5));
    results.push_back(
        check_net_loss("grad/unet-conditional-loss", net, x_t, 42, &y, eps, rng, 10));
  }

  return results;
}

namespace {

double rel_diff(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

CheckResult make_check(std::string name, double observed, double threshold) {
  return CheckResult{std::move(name), observed < threshold, observed, threshold};
}

}  // namespace

std::vector<CheckResult> property_checks(int dim, std::uint64_t seed) {
  if (dim < 2) throw ConfigError("prop-check: dim must be >= 2");
  Rng rng = make_rng(seed);
  std::vector<CheckResult> results;

  const SpdMatrix x = validate_spd(spread_spd(dim, rng));
  const SpdMatrix y = validate_spd(spread_spd(dim, rng, -0.5, 0.7));
  const SpdMatrix ident = SpdMatrix::Identity(dim);

  results.push_back(make_check("prop/oplus-identity", rel_diff(oplus(x, ident).mat(), x.mat()),
                               1e-10));
  results.push_back(
      make_check("prop/oplus-commutes", rel_diff(oplus(x, y).mat(), oplus(y, x).mat()), 1e-10));
  results.push_back(
      make_check("prop/ominus-roundtrip", rel_diff(ominus(oplus(x, y), y).mat(), x.mat()), 1e-9));
  results.push_back(
      make_check("prop/odot-zero", (odot(0.0, x).mat() - Matrix::Identity(dim, dim)).norm(),
                 1e-12));
  results.push_back(make_check(
      "prop/odot-splits",
      rel_diff(odot(1.5, x).mat(), oplus(odot(0.3, x), odot(1.2, x)).mat()), 1e-10));

  {
    Matrix a = random_general(dim, dim, rng);
    a += 0.5 * dim * Matrix::Identity(dim, dim);  // comfortably invertible
    const double base = dist_affine(x, y);
    const double moved = dist_affine(group_action(x, a), group_action(y, a));
    results.push_back(make_check("prop/congruence-isometry", std::abs(moved - base), 1e-8));
    results.push_back(
        make_check("prop/inversion-isometry",
                   std::abs(dist_affine(mat_inv(x), mat_inv(y)) - base), 1e-8));
    results.push_back(
        make_check("prop/distance-symmetry", std::abs(dist_affine(y, x) - base), 1e-10));
    results.push_back(make_check("prop/distance-self", dist_affine(x, x), 1e-7));
    const Matrix b = haar_orthogonal(dim, rng);
    results.push_back(make_check(
        "prop/group-action-composes",
        rel_diff(group_action(group_action(x, a), b).mat(), group_action(x, a * b).mat()),
        1e-10));
  }

  results.push_back(
      make_check("prop/log-exp-roundtrip",
                 rel_diff(mat_exp(mat_log(x)).mat(), x.mat()), 1e-10));
  results.push_back(make_check(
      "prop/volume-density",
      std::abs(std::log(volume_density(x)) + 0.5 * (dim + 1) * std::log(x.mat().determinant())),
      1e-9));

  {
    const SpdMatrix eps = validate_spd(spread_spd(dim, rng, -0.3, 0.4));
    const SpdMatrix moved = group_action(eps, mat_sqrt(x).mat());
    results.push_back(make_check("prop/exact-translation",
                                 std::abs(dist_affine(moved, x) - dist_affine(eps, ident)),
                                 1e-8));
  }

  {
    const NoiseSchedule s(200);
    double worst = 0.0;
    double alpha_bar = 1.0, beta_bar_prev = 0.0;
    for (int t = 1; t <= 200; ++t) {
      worst = std::max(worst, std::abs(s.alpha(t) * s.alpha(t) + s.beta(t) * s.beta(t) - 1.0));
      alpha_bar *= s.alpha(t);
      worst = std::max(worst, std::abs(s.alpha_bar(t) - alpha_bar));
      const double beta_bar = std::sqrt(1.0 - alpha_bar * alpha_bar);
      worst = std::max(worst, std::abs(s.beta_bar(t) - beta_bar));
      const double sigma_tilde = beta_bar_prev * s.beta(t) / beta_bar;
      worst = std::max(worst, std::abs(s.sigma_tilde(t) - sigma_tilde));
      beta_bar_prev = beta_bar;
    }
    results.push_back(make_check("prop/schedule-recursion", worst, 1e-12));
    results.push_back(make_check("prop/schedule-alpha-T",
                                 std::abs(s.alpha(200) - std::sqrt(0.92)), 1e-12));
    const bool window = s.alpha_bar(200) > 0.014 && s.alpha_bar(200) < 0.018;
    results.push_back(CheckResult{"prop/schedule-alpha-bar-window", window, s.alpha_bar(200),
                                  0.018});
    results.push_back(
        CheckResult{"prop/sigma-tilde-1-zero", s.sigma_tilde(1) == 0.0, s.sigma_tilde(1), 0.0});
  }

  {
    const NoiseSchedule s(50);
    const SpdMatrix eps = validate_spd(spread_spd(dim, rng, -0.3, 0.4));
    const SpdMatrix x1 = forward_jump(x, 1, eps, s);
    const PosteriorParams post = posterior_params(x1, eps, 1, s);
    results.push_back(
        make_check("prop/posterior-reconstructs-x0", rel_diff(post.mean.mat(), x.mat()), 1e-9));

    const int t = 7;
    const SpdMatrix xt = forward_jump(x, t, eps, s);
    const PosteriorParams post_t = posterior_params(xt, eps, t, s);
    const double coef = s.alpha(t) * s.beta_bar(t - 1) * s.beta_bar(t - 1) / s.beta_bar(t);
    const Matrix expect =
        mat_exp(SymmetricMatrix(s.alpha_bar(t - 1) * mat_log(x).mat() + coef * mat_log(eps).mat()))
            .mat();
    results.push_back(
        make_check("prop/posterior-general-t", rel_diff(post_t.mean.mat(), expect), 1e-9));
    results.push_back(make_check(
        "prop/posterior-sigma",
        std::abs(post_t.sigma - s.beta_bar(t - 1) * s.beta(t) / s.beta_bar(t)), 1e-12));

    // When X and eps share an eigenbasis the congruence step equals its
    // commutative oplus form.
    const Matrix frame = haar_orthogonal(dim, rng);
    Vector lam_x(dim), lam_e(dim);
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    for (int i = 0; i < dim; ++i) {
      lam_x[i] = std::exp(u(rng));
      lam_e[i] = std::exp(u(rng));
    }
    const SpdMatrix cx = validate_spd(frame * lam_x.asDiagonal() * frame.transpose());
    const SpdMatrix ce = validate_spd(frame * lam_e.asDiagonal() * frame.transpose());
    const SpdMatrix stepped = forward_step(cx, t, ce, s);
    const SpdMatrix split = oplus(odot(s.alpha(t), cx), odot(s.beta(t), ce));
    results.push_back(
        make_check("prop/forward-step-commuting", rel_diff(stepped.mat(), split.mat()), 1e-9));
  }

  {
    const Matrix xi = mat_inv_sqrt(x).mat();
    const SpdMatrix mid = group_action(
        mat_pow(group_action(y, xi), 0.5), mat_sqrt(x).mat());
    FrechetConfig cfg;
    const FrechetResult fr = frechet_mean({x, y}, cfg);
    double worst = dist_affine(fr.mean, mid);
    if (!fr.converged) worst = std::max(worst, 1.0);
    results.push_back(make_check("prop/frechet-two-point", worst, 1e-6));
    const double half = dist_affine(x, y) / 2.0;
    results.push_back(
        make_check("prop/frechet-objective", std::abs(fr.objective - half * half), 1e-8));
  }

  {
    double worst = 0.0;
    for (double sigma : {0.1, 0.5, 1.0, 2.0}) {
      const double pi = std::numbers::pi;
      const double closed =
          2.0 * pi * pi * sigma * sigma * std::exp(sigma * sigma / 4.0) * std::erf(sigma / 2.0);
      worst = std::max(worst, std::abs(normalizer_zeta(sigma, 2) - closed) / closed);
    }
    results.push_back(make_check("prop/zeta-m2-closed-form", worst, 1e-8));
  }

  {
    double worst = std::abs(radial_cdf(0.4, 2, 0.0));
    double prev = 0.0;
    for (int k = 1; k <= 40; ++k) {
      const double c = radial_cdf(0.4, 2, 0.12 * k);
      worst = std::max(worst, prev - c);
      prev = c;
    }
    worst = std::max(worst, std::abs(1.0 - radial_cdf(0.4, 2, 8.0)));
    results.push_back(make_check("prop/radial-cdf-monotone", worst, 1e-6));
  }

  {
    const Matrix o = haar_orthogonal(dim, rng);
    const double ortho = (o.transpose() * o - Matrix::Identity(dim, dim)).norm();
    const double det = std::abs(std::abs(o.determinant()) - 1.0);
    results.push_back(make_check("prop/haar-orthogonal", std::max(ortho, det), 1e-12));
  }

  {
    Rng nrng = make_rng(seed, 7);
    SpdUNet net(UNetSpec::for_dim(dim), nrng);
    const Matrix e = net.embed_condition(12);
    results.push_back(make_check("prop/injector-identity-at-init",
                                 (e - Matrix::Identity(dim, dim)).norm(), 1e-14));
  }

  return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const CheckResult& r) { return r.passed; });
}

void print_results(std::ostream& os, const std::vector<CheckResult>& results) {
  for (const CheckResult& r : results) {
    os << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": observed " << r.observed
       << " (tolerance " << r.threshold << ")\n";
  }
}

}  // namespace spdddpm::verify
