#include "spdddpm/tape.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <utility>

namespace spdddpm::ad {

namespace {

constexpr double kDegenerateGap = 1e-9;

Matrix symmetrized(const Matrix& m) { return ((m + m.transpose()) * 0.5).eval(); }

void require(bool ok, const char* msg) {
  if (!ok) throw ShapeMismatchError(msg);
}

/// dX = U (L o (U^T sym(G) U)) U^T for a spectral op with scalar map f.
Matrix loewner_backprop(const Matrix& u, const Vector& lam, const Matrix& g,
                        const std::function<double(double)>& f,
                        const std::function<double(double)>& fp) {
  Matrix gt = u.transpose() * symmetrized(g) * u;
  const Eigen::Index n = lam.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double li = lam[i], lj = lam[j];
      double k;
      if (std::abs(li - lj) < kDegenerateGap) {
        k = fp(0.5 * (li + lj));
      } else {
        k = (f(li) - f(lj)) / (li - lj);
      }
      gt(i, j) *= k;
    }
  }
  return symmetrized(u * gt * u.transpose());
}

}  // namespace

int Tape::push(Node n) {
  if (!n.value.allFinite()) {
    throw spdddpm::Error("Tape: node produced a non-finite value");
  }
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

const Tape::Node& Tape::at(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size())) {
    throw spdddpm::Error("Tape: node id out of range");
  }
  return nodes_[static_cast<std::size_t>(id)];
}

Tape::Node& Tape::at(int id) {
  return const_cast<Node&>(static_cast<const Tape*>(this)->at(id));
}

int Tape::constant(Matrix v) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(v);
  return push(std::move(n));
}

int Tape::param(Matrix v) {
  Node n;
  n.op = Op::kParam;
  n.value = std::move(v);
  return push(std::move(n));
}

int Tape::bimap(int w, int x) {
  const Matrix& wv = at(w).value;
  const Matrix& xv = at(x).value;
  require(xv.rows() == xv.cols(), "bimap: X must be square");
  require(wv.cols() == xv.rows(), "bimap: W columns must match X dimension");
  Node n;
  n.op = Op::kBiMap;
  n.a = w;
  n.b = x;
  n.value = symmetrized(wv * xv * wv.transpose());
  return push(std::move(n));
}

namespace {

SpectralDecomposition spectral_of(const Matrix& m, const char* what) {
  require(m.rows() == m.cols(), "spectral op: input must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrized(m));
  if (solver.info() != Eigen::Success) {
    throw spdddpm::ConvergenceError(std::string(what) + ": eigendecomposition failed");
  }
  return SpectralDecomposition{solver.eigenvectors(), solver.eigenvalues()};
}

}  // namespace

int Tape::reeig(int x, double floor) {
  if (!(floor > 0.0)) throw spdddpm::ConfigError("reeig: floor must be positive");
  SpectralDecomposition sd = spectral_of(at(x).value, "reeig");
  Vector clamped = sd.lambda.cwiseMax(floor);
  Node n;
  n.op = Op::kReEig;
  n.a = x;
  n.s0 = floor;
  n.value = symmetrized(sd.u * clamped.asDiagonal() * sd.u.transpose());
  n.u = std::move(sd.u);
  n.lambda = std::move(sd.lambda);
  return push(std::move(n));
}

int Tape::matlog(int x) {
  SpectralDecomposition sd = spectral_of(at(x).value, "matlog");
  if (!(sd.lambda.minCoeff() > 0.0)) {
    throw spdddpm::NotPositiveDefiniteError("matlog: input not positive definite",
                                            sd.lambda.minCoeff());
  }
  Node n;
  n.op = Op::kMatLog;
  n.a = x;
  n.value = symmetrized(sd.u * sd.lambda.array().log().matrix().asDiagonal() * sd.u.transpose());
  n.u = std::move(sd.u);
  n.lambda = std::move(sd.lambda);
  return push(std::move(n));
}

int Tape::matpow(int x, double exponent) {
  SpectralDecomposition sd = spectral_of(at(x).value, "matpow");
  if (!(sd.lambda.minCoeff() > 0.0)) {
    throw spdddpm::NotPositiveDefiniteError("matpow: input not positive definite",
                                            sd.lambda.minCoeff());
  }
  Node n;
  n.op = Op::kMatPow;
  n.a = x;
  n.s0 = exponent;
  Vector mapped(sd.lambda.size());
  for (Eigen::Index i = 0; i < mapped.size(); ++i) mapped[i] = std::pow(sd.lambda[i], exponent);
  n.value = symmetrized(sd.u * mapped.asDiagonal() * sd.u.transpose());
  n.u = std::move(sd.u);
  n.lambda = std::move(sd.lambda);
  return push(std::move(n));
}

int Tape::lincomb(double ca, int a, double cb, int b) {
  const Matrix& av = at(a).value;
  const Matrix& bv = at(b).value;
  require(av.rows() == bv.rows() && av.cols() == bv.cols(), "lincomb: shape mismatch");
  Node n;
  n.op = Op::kLinComb;
  n.a = a;
  n.b = b;
  n.s0 = ca;
  n.s1 = cb;
  n.value = ca * av + cb * bv;
  return push(std::move(n));
}

int Tape::affine_identity(int x, double scale, double ident) {
  const Matrix& xv = at(x).value;
  require(xv.rows() == xv.cols(), "affine_identity: input must be square");
  Node n;
  n.op = Op::kAffineIdentity;
  n.a = x;
  n.s0 = scale;
  n.value = ident * Matrix::Identity(xv.rows(), xv.cols()) + scale * xv;
  return push(std::move(n));
}

int Tape::tanh_elem(int x) {
  Node n;
  n.op = Op::kTanh;
  n.a = x;
  n.value = at(x).value.array().tanh().matrix();
  return push(std::move(n));
}

int Tape::embed_topleft(int x, int dim) {
  const Matrix& xv = at(x).value;
  require(xv.rows() == xv.cols(), "embed_topleft: input must be square");
  require(dim >= xv.rows(), "embed_topleft: target dim smaller than input");
  Node n;
  n.op = Op::kEmbedTopLeft;
  n.a = x;
  n.value = Matrix::Identity(dim, dim);
  n.value.topLeftCorner(xv.rows(), xv.cols()) = xv;
  return push(std::move(n));
}

int Tape::dense_affine(int w, int b, int u) {
  const Matrix& wv = at(w).value;
  const Matrix& bv = at(b).value;
  const Matrix& uv = at(u).value;
  require(uv.cols() == 1 && bv.cols() == 1, "dense_affine: u and b must be column vectors");
  require(wv.cols() == uv.rows() && wv.rows() == bv.rows(), "dense_affine: shape mismatch");
  Node n;
  n.op = Op::kDenseAffine;
  n.a = w;
  n.b = b;
  n.c = u;
  n.value = wv * uv + bv;
  return push(std::move(n));
}

int Tape::reshape_square(int v, int d) {
  const Matrix& vv = at(v).value;
  require(vv.cols() == 1 && vv.rows() == static_cast<Eigen::Index>(d) * d,
          "reshape_square: need a d*d column vector");
  Node n;
  n.op = Op::kReshapeSquare;
  n.a = v;
  n.s0 = d;
  n.value.resize(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) n.value(i, j) = vv(static_cast<Eigen::Index>(i) * d + j, 0);
  }
  return push(std::move(n));
}

int Tape::frob_sq(int x) {
  Node n;
  n.op = Op::kFrobSq;
  n.a = x;
  n.value = Matrix::Constant(1, 1, at(x).value.squaredNorm());
  return push(std::move(n));
}

const Matrix& Tape::value(int id) const { return at(id).value; }

const Matrix& Tape::grad(int id) const {
  if (!has_grads_) throw spdddpm::Error("Tape: grad() before backward()");
  return at(id).grad;
}

void Tape::backward(int output) {
  const Node& out = at(output);
  if (out.value.rows() != 1 || out.value.cols() != 1) {
    throw spdddpm::Error("Tape: backward() output must be 1x1");
  }
  for (Node& n : nodes_) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  at(output).grad = Matrix::Constant(1, 1, 1.0);
  has_grads_ = true;

  for (int id = output; id >= 0; --id) {
    Node& n = at(id);
    const Matrix& g = n.grad;
    switch (n.op) {
      case Op::kConstant:
      case Op::kParam:
        break;
      case Op::kBiMap: {
        const Matrix gs = symmetrized(g);
        const Matrix& wv = at(n.a).value;
        const Matrix& xv = at(n.b).value;
        at(n.a).grad += 2.0 * gs * wv * xv;
        at(n.b).grad += symmetrized(wv.transpose() * gs * wv);
        break;
      }
      case Op::kReEig: {
        const double floor = n.s0;
        at(n.a).grad += loewner_backprop(
            n.u, n.lambda, g, [floor](double l) { return std::max(l, floor); },
            [floor](double l) { return l > floor ? 1.0 : 0.0; });
        break;
      }
      case Op::kMatLog: {
        at(n.a).grad += loewner_backprop(
            n.u, n.lambda, g, [](double l) { return std::log(l); },
            [](double l) { return 1.0 / l; });
        break;
      }
      case Op::kMatPow: {
        const double p = n.s0;
        at(n.a).grad += loewner_backprop(
            n.u, n.lambda, g, [p](double l) { return std::pow(l, p); },
            [p](double l) { return p * std::pow(l, p - 1.0); });
        break;
      }
      case Op::kLinComb:
        at(n.a).grad += n.s0 * g;
        at(n.b).grad += n.s1 * g;
        break;
      case Op::kAffineIdentity:
        at(n.a).grad += n.s0 * g;
        break;
      case Op::kTanh:
        at(n.a).grad +=
            (g.array() * (1.0 - n.value.array() * n.value.array())).matrix();
        break;
      case Op::kEmbedTopLeft: {
        Node& in = at(n.a);
        in.grad += g.topLeftCorner(in.value.rows(), in.value.cols());
        break;
      }
      case Op::kDenseAffine: {
        const Matrix& wv = at(n.a).value;
        const Matrix& uv = at(n.c).value;
        at(n.a).grad += g * uv.transpose();
        at(n.b).grad += g;
        at(n.c).grad += wv.transpose() * g;
        break;
      }
      case Op::kReshapeSquare: {
        const int d = static_cast<int>(n.s0);
        Node& in = at(n.a);
        for (int i = 0; i < d; ++i) {
          for (int j = 0; j < d; ++j) {
            in.grad(static_cast<Eigen::Index>(i) * d + j, 0) += g(i, j);
          }
        }
        break;
      }
      case Op::kFrobSq:
        at(n.a).grad += 2.0 * g(0, 0) * at(n.a).value;
        break;
    }
  }
}

}  // namespace spdddpm::ad
