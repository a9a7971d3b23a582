#pragma once

#include <vector>

#include "spdddpm/spd_matrix.hpp"

namespace spdddpm::ad {

using spdddpm::Matrix;
using spdddpm::Vector;

/// Reverse-mode differentiation record over dense matrices and vectors
/// (vectors are stored as n-by-1 matrices).  Spectral ops (ReEig, MatLog,
/// MatPow) cache the eigendecomposition of their input and backpropagate via
/// the Loewner divided-difference rule; degenerate eigenvalue pairs with
/// |lambda_i - lambda_j| < 1e-9 fall back to f'((lambda_i + lambda_j)/2).
class Tape {
 public:
  /// Leaf holding a value with no gradient consumer.
  int constant(Matrix v);
  /// Leaf whose gradient will be read out after backward().
  int param(Matrix v);

  /// W X W^T; X must be symmetric.  W may be rectangular.
  int bimap(int w, int x);
  /// U max(lambda, floor) U^T.
  int reeig(int x, double floor);
  /// Matrix logarithm of an SPD value.
  int matlog(int x);
  /// Matrix power of an SPD value.
  int matpow(int x, double exponent);
  /// ca * A + cb * B (same shape).
  int lincomb(double ca, int a, double cb, int b);
  /// ident * I + scale * X (X square).
  int affine_identity(int x, double scale, double ident);
  /// Elementwise tanh.
  int tanh_elem(int x);
  /// Copies X into the top-left block of an identity of size dim.
  int embed_topleft(int x, int dim);
  /// W u + b for a column vector u.
  int dense_affine(int w, int b, int u);
  /// Reshapes a d*d column vector into a d-by-d matrix, row-major.
  int reshape_square(int v, int d);
  /// Sum of squared entries, as a 1x1 node.
  int frob_sq(int x);

  [[nodiscard]] const Matrix& value(int id) const;
  /// Seeds the 1x1 output node with 1 and accumulates gradients to leaves.
  void backward(int output);
  /// Valid after backward(); zero matrix for nodes the output ignores.
  [[nodiscard]] const Matrix& grad(int id) const;

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    kConstant,
    kParam,
    kBiMap,
    kReEig,
    kMatLog,
    kMatPow,
    kLinComb,
    kAffineIdentity,
    kTanh,
    kEmbedTopLeft,
    kDenseAffine,
    kReshapeSquare,
    kFrobSq,
  };

  struct Node {
    Op op;
    int a = -1, b = -1, c = -1;
    double s0 = 0.0, s1 = 0.0;
    Matrix value;
    Matrix u;       // eigenvectors of the spectral input, when cached
    Vector lambda;  // matching eigenvalues
    Matrix grad;
  };

  int push(Node n);
  const Node& at(int id) const;
  Node& at(int id);

  std::vector<Node> nodes_;
  bool has_grads_ = false;
};

}  // namespace spdddpm::ad
