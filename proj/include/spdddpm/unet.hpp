#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "spdddpm/rng.hpp"
#include "spdddpm/spd_matrix.hpp"
#include "spdddpm/tape.hpp"

namespace spdddpm {

/// Topology of the SPD U-Net: five double convolutions, two down and two up
/// convolutions, skip connections averaged back in (Fig. 2).  Stage dims
/// default to m -> ceil(3m/4) -> ceil(m/2); for small m consecutive stages may
/// coincide (non-increasing rather than strictly decreasing).
struct UNetSpec {
  int input_dim = 3;
  int cond_width = 0;  // predictor vector length; 0 = unconditional
  int time_embed_width = 32;
  int injector_hidden = 32;
  std::array<int, 3> stage_dims{3, 3, 2};
  double reeig_floor = 1e-4;

  static UNetSpec for_dim(int m, int cond_width = 0);
  void validate() const;
};

struct DenseParams {
  Matrix w;
  Matrix b;  // column vector
};

/// Parameters of one embedding injector: u = [sinusoidal(t); y] -> dense+tanh
/// -> dense -> reshape to d x d -> E = I + 0.5 tanh(P).
struct InjectorParams {
  DenseParams l1;
  DenseParams l2;
};

struct DoubleConvParams {
  Matrix w1;
  InjectorParams inj1;
  Matrix w2;
  InjectorParams inj2;
};

struct UNetParams {
  DoubleConvParams enc1;
  Matrix down1;
  DoubleConvParams enc2;
  Matrix down2;
  DoubleConvParams bott;
  Matrix up1;
  DoubleConvParams dec1;
  Matrix up2;
  DoubleConvParams dec2;
};

/// Sinusoidal position embedding of the integer timestep (width even).
Vector sinusoidal_embedding(int t, int width);

/// The injector's E matrix for a given timestep/condition, evaluated without
/// a tape.  y == nullptr uses the null token (zero vector).
Matrix injector_matrix(const InjectorParams& inj, const UNetSpec& spec, int t, const Vector* y,
                       int d);

/// eps_theta(X_t, t [, y]): the SPD U-Net.
class SpdUNet {
 public:
  SpdUNet(UNetSpec spec, Rng& rng);
  /// Reconstructs a network from checkpoint data.
  SpdUNet(UNetSpec spec, std::vector<std::vector<double>> flat_params);

  [[nodiscard]] const UNetSpec& spec() const { return spec_; }

  /// Records the full forward pass on the tape.  Returns the output node;
  /// param_nodes (when non-null) receives one node id per parameter in
  /// enumeration order.  y == nullptr means the null token for conditional
  /// nets; for unconditional nets y must be null.
  int build_forward(ad::Tape& tape, const Matrix& x, int t, const Vector* y,
                    std::vector<int>* param_nodes) const;

  /// Inference-only forward pass.
  SpdMatrix forward(const SpdMatrix& x, int t, const Vector* y = nullptr) const;

  /// E of the first encoder injector (the mechanism shared by all injectors).
  Matrix embed_condition(int t, const Vector* y = nullptr) const;

  /// Stable parameter enumeration used by the optimizer and checkpoints.
  void for_each_param(const std::function<void(const Matrix&)>& fn) const;
  std::vector<Matrix*> param_ptrs();
  [[nodiscard]] int n_params() const;

  [[nodiscard]] std::vector<std::vector<double>> flatten_params() const;

 private:
  void init_params(Rng& rng);
  UNetSpec spec_;
  UNetParams params_;
};

}  // namespace spdddpm
