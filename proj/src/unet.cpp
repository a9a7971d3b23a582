#include "spdddpm/unet.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "spdddpm/gaussian.hpp"

namespace spdddpm {

UNetSpec UNetSpec::for_dim(int m, int cond_width) {
  UNetSpec s;
  s.input_dim = m;
  s.cond_width = cond_width;
  s.stage_dims = {m, (3 * m + 3) / 4, (m + 1) / 2};
  return s;
}

void UNetSpec::validate() const {
  if (input_dim < 1) throw ConfigError("UNetSpec: input_dim must be >= 1");
  if (cond_width < 0) throw ConfigError("UNetSpec: cond_width must be >= 0");
  if (time_embed_width < 2 || time_embed_width % 2 != 0) {
    throw ConfigError("UNetSpec: time_embed_width must be a positive even number");
  }
  if (injector_hidden < 1) throw ConfigError("UNetSpec: injector_hidden must be >= 1");
  if (stage_dims[0] != input_dim) throw ConfigError("UNetSpec: stage_dims[0] must equal input_dim");
  if (stage_dims[2] < 1 || stage_dims[1] < stage_dims[2] || stage_dims[0] < stage_dims[1]) {
    throw ConfigError("UNetSpec: stage dims must be positive and non-increasing");
  }
  if (!(reeig_floor > 0.0)) throw ConfigError("UNetSpec: reeig_floor must be positive");
}

Vector sinusoidal_embedding(int t, int width) {
  const int half = width / 2;
  Vector emb(width);
  for (int k = 0; k < half; ++k) {
    const double freq = std::exp(-std::log(10000.0) * k / half);
    emb[k] = std::sin(t * freq);
    emb[half + k] = std::cos(t * freq);
  }
  return emb;
}

namespace {

/// [sinusoidal(t); y or zeros]; validates the condition length.
Vector injector_input(const UNetSpec& spec, int t, const Vector* y) {
  if (spec.cond_width == 0 && y != nullptr && y->size() != 0) {
    throw BadConditionError("unconditional network given a nonempty condition vector");
  }
  if (y != nullptr && spec.cond_width > 0 && y->size() != spec.cond_width) {
    std::ostringstream os;
    os << "condition vector length " << y->size() << " does not match cond_width "
       << spec.cond_width;
    throw BadConditionError(os.str());
  }
  Vector u = Vector::Zero(spec.time_embed_width + spec.cond_width);
  u.head(spec.time_embed_width) = sinusoidal_embedding(t, spec.time_embed_width);
  if (y != nullptr && spec.cond_width > 0) u.tail(spec.cond_width) = *y;
  return u;
}

struct TapeBuilder {
  ad::Tape& tape;
  const UNetSpec& spec;
  int t;
  const Vector* y;
  std::vector<int>* param_nodes;

  int param(const Matrix& m) {
    const int id = tape.param(m);
    if (param_nodes != nullptr) param_nodes->push_back(id);
    return id;
  }

  // Registration order must match visit_params; param() calls are sequenced
  // as separate statements because argument evaluation order is unspecified.
  int inject(const InjectorParams& inj, int x, int d) {
    const int u = tape.constant(injector_input(spec, t, y));
    const int w1 = param(inj.l1.w);
    const int b1 = param(inj.l1.b);
    const int h = tape.tanh_elem(tape.dense_affine(w1, b1, u));
    const int w2 = param(inj.l2.w);
    const int b2 = param(inj.l2.b);
    const int p = tape.dense_affine(w2, b2, h);
    const int e = tape.affine_identity(tape.tanh_elem(tape.reshape_square(p, d)), 0.5, 1.0);
    return tape.bimap(e, x);
  }

  int double_conv(const DoubleConvParams& dc, int x, int d) {
    const int w1 = param(dc.w1);
    x = tape.reeig(inject(dc.inj1, tape.bimap(w1, x), d), spec.reeig_floor);
    const int w2 = param(dc.w2);
    x = tape.reeig(inject(dc.inj2, tape.bimap(w2, x), d), spec.reeig_floor);
    return x;
  }

  int down(const Matrix& w, int x) { return tape.reeig(tape.bimap(param(w), x), spec.reeig_floor); }

  int up(const Matrix& w, int x, int target_dim) {
    return tape.reeig(tape.bimap(param(w), tape.embed_topleft(x, target_dim)), spec.reeig_floor);
  }

  int concat_mean(int a, int b) {
    return tape.reeig(tape.lincomb(0.5, a, 0.5, b), spec.reeig_floor);
  }
};

}  // namespace

Matrix injector_matrix(const InjectorParams& inj, const UNetSpec& spec, int t, const Vector* y,
                       int d) {
  const Vector u = injector_input(spec, t, y);
  const Vector h = (inj.l1.w * u + inj.l1.b).array().tanh().matrix();
  const Vector p = inj.l2.w * h + inj.l2.b;
  Matrix e = Matrix::Identity(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) e(i, j) += 0.5 * std::tanh(p[static_cast<Eigen::Index>(i) * d + j]);
  }
  return e;
}

SpdUNet::SpdUNet(UNetSpec spec, Rng& rng) : spec_(std::move(spec)) {
  spec_.validate();
  init_params(rng);
}

namespace {

void visit_params(const UNetParams& p, const std::function<void(const Matrix&)>& fn) {
  const auto dense = [&](const DenseParams& d) {
    fn(d.w);
    fn(d.b);
  };
  const auto dc = [&](const DoubleConvParams& c) {
    fn(c.w1);
    dense(c.inj1.l1);
    dense(c.inj1.l2);
    fn(c.w2);
    dense(c.inj2.l1);
    dense(c.inj2.l2);
  };
  dc(p.enc1);
  fn(p.down1);
  dc(p.enc2);
  fn(p.down2);
  dc(p.bott);
  fn(p.up1);
  dc(p.dec1);
  fn(p.up2);
  dc(p.dec2);
}

std::vector<Matrix*> collect_param_ptrs(UNetParams& p) {
  std::vector<Matrix*> out;
  visit_params(p, [&](const Matrix& m) { out.push_back(const_cast<Matrix*>(&m)); });
  return out;
}

}  // namespace

void SpdUNet::init_params(Rng& rng) {
  const int d0 = spec_.stage_dims[0];
  const int d1 = spec_.stage_dims[1];
  const int d2 = spec_.stage_dims[2];
  const int in_width = spec_.time_embed_width + spec_.cond_width;
  const int hidden = spec_.injector_hidden;
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto dense_init = [&](int rows, int cols, bool zero) {
    DenseParams d;
    d.b = Matrix::Zero(rows, 1);
    if (zero) {
      d.w = Matrix::Zero(rows, cols);
    } else {
      d.w.resize(rows, cols);
      const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) d.w(i, j) = scale * normal(rng);
      }
    }
    return d;
  };
  const auto injector_init = [&](int d) {
    InjectorParams inj;
    inj.l1 = dense_init(hidden, in_width, false);
    inj.l2 = dense_init(d * d, hidden, true);  // zero init: E = I at start
    return inj;
  };
  const auto dc_init = [&](int d) {
    DoubleConvParams c;
    c.w1 = haar_orthogonal(d, rng);
    c.inj1 = injector_init(d);
    c.w2 = haar_orthogonal(d, rng);
    c.inj2 = injector_init(d);
    return c;
  };
  const auto semi_orthogonal = [&](int rows, int cols) {
    return Matrix(haar_orthogonal(cols, rng).topRows(rows));
  };

  params_.enc1 = dc_init(d0);
  params_.down1 = semi_orthogonal(d1, d0);
  params_.enc2 = dc_init(d1);
  params_.down2 = semi_orthogonal(d2, d1);
  params_.bott = dc_init(d2);
  params_.up1 = haar_orthogonal(d1, rng);
  params_.dec1 = dc_init(d1);
  params_.up2 = haar_orthogonal(d0, rng);
  params_.dec2 = dc_init(d0);
}

SpdUNet::SpdUNet(UNetSpec spec, std::vector<std::vector<double>> flat_params)
    : spec_(std::move(spec)) {
  spec_.validate();
  Rng scratch = make_rng(0);
  init_params(scratch);  // sets shapes; values overwritten below
  std::vector<Matrix*> ptrs = collect_param_ptrs(params_);
  if (flat_params.size() != ptrs.size()) {
    throw ConfigError("SpdUNet: checkpoint parameter count does not match topology");
  }
  for (std::size_t k = 0; k < ptrs.size(); ++k) {
    Matrix& m = *ptrs[k];
    if (static_cast<Eigen::Index>(flat_params[k].size()) != m.size()) {
      throw ConfigError("SpdUNet: checkpoint parameter shape mismatch");
    }
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = flat_params[k][idx++];
    }
  }
}

int SpdUNet::build_forward(ad::Tape& tape, const Matrix& x, int t, const Vector* y,
                           std::vector<int>* param_nodes) const {
  if (x.rows() != spec_.input_dim || x.cols() != spec_.input_dim) {
    throw ShapeMismatchError("SpdUNet: input dimension mismatch");
  }
  if (t < 1) throw ConfigError("SpdUNet: t must be >= 1");
  TapeBuilder tb{tape, spec_, t, y, param_nodes};
  const int d0 = spec_.stage_dims[0];
  const int d1 = spec_.stage_dims[1];
  const int d2 = spec_.stage_dims[2];

  int cur = tape.constant(x);
  const int skip1 = tb.double_conv(params_.enc1, cur, d0);
  cur = tb.down(params_.down1, skip1);
  const int skip2 = tb.double_conv(params_.enc2, cur, d1);
  cur = tb.down(params_.down2, skip2);
  cur = tb.double_conv(params_.bott, cur, d2);
  cur = tb.up(params_.up1, cur, d1);
  cur = tb.concat_mean(cur, skip2);
  cur = tb.double_conv(params_.dec1, cur, d1);
  cur = tb.up(params_.up2, cur, d0);
  cur = tb.concat_mean(cur, skip1);
  cur = tb.double_conv(params_.dec2, cur, d0);
  return cur;
}

SpdMatrix SpdUNet::forward(const SpdMatrix& x, int t, const Vector* y) const {
  ad::Tape tape;
  const int out = build_forward(tape, x.mat(), t, y, nullptr);
  return validate_spd(tape.value(out));
}

Matrix SpdUNet::embed_condition(int t, const Vector* y) const {
  return injector_matrix(params_.enc1.inj1, spec_, t, y, spec_.stage_dims[0]);
}

void SpdUNet::for_each_param(const std::function<void(const Matrix&)>& fn) const {
  visit_params(params_, fn);
}

std::vector<Matrix*> SpdUNet::param_ptrs() { return collect_param_ptrs(params_); }

int SpdUNet::n_params() const {
  int count = 0;
  visit_params(params_, [&](const Matrix&) { ++count; });
  return count;
}

std::vector<std::vector<double>> SpdUNet::flatten_params() const {
  std::vector<std::vector<double>> out;
  visit_params(params_, [&](const Matrix& m) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
    }
    out.push_back(std::move(flat));
  });
  return out;
}

}  // namespace spdddpm
