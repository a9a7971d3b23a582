#include "spdddpm/dataset.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "spdddpm/csv.hpp"
#include "spdddpm/parallel.hpp"

namespace spdddpm {

using nlohmann::json;

Metric parse_metric(const std::string& name) {
  if (name == "affine") return Metric::affine;
  if (name == "frobenius") return Metric::frobenius;
  throw ConfigError("unknown metric '" + name + "' (expected affine or frobenius)");
}

std::string metric_name(Metric metric) {
  return metric == Metric::affine ? "affine" : "frobenius";
}

void ToySpec::validate() const {
  if (!(sigma > 0.0)) throw ConfigError("ToySpec: sigma must be positive");
  if (count < 0) throw ConfigError("ToySpec: count must be >= 0");
}

SpdMatrix random_toy_center(int dim, Rng& rng) {
  std::uniform_real_distribution<double> log_eig(std::log(0.5), std::log(2.0));
  Vector lambda(dim);
  for (int i = 0; i < dim; ++i) lambda[i] = std::exp(log_eig(rng));
  const Matrix o = haar_orthogonal(dim, rng);
  return validate_spd(o * lambda.asDiagonal() * o.transpose());
}

Dataset generate_toy(const ToySpec& spec, const EigenSamplerConfig& sampler_cfg, Rng& rng) {
  spec.validate();
  sampler_cfg.validate();
  const RiemannianGaussian g(spec.center, spec.sigma);
  const std::uint64_t base_seed = rng();
  std::vector<std::optional<SpdMatrix>> draws(static_cast<std::size_t>(spec.count));
  parallel_for(draws.size(), [&](std::size_t i) {
    Rng drng = make_rng(base_seed, i);
    draws[i] = sample(g, sampler_cfg, drng);
  });
  Dataset out;
  out.reserve(draws.size());
  for (auto& d : draws) out.push_back(MatrixRecord{std::move(*d), std::nullopt});
  return out;
}

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, long line) {
  if (!j.is_array() || j.empty()) throw ParseError("matrix must be a nonempty array of rows", line);
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Matrix m;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array()) throw ParseError("matrix row must be an array", line);
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      if (cols != rows) throw ParseError("matrix must be square", line);
      m.resize(rows, cols);
    }
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ParseError("ragged matrix rows", line);
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      const json& cell = row[static_cast<std::size_t>(k)];
      if (!cell.is_number()) throw ParseError("matrix entries must be numbers", line);
      m(i, k) = cell.get<double>();
    }
  }
  return m;
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open dataset file for writing: " + path);
  for (const MatrixRecord& r : dataset) {
    json line{{"matrix", matrix_to_json(r.matrix.mat())}};
    if (r.predictors) {
      json preds = json::array();
      for (Eigen::Index i = 0; i < r.predictors->size(); ++i) preds.push_back((*r.predictors)[i]);
      line["predictors"] = std::move(preds);
    }
    out << line.dump() << "\n";
  }
  if (!out) throw IoError("failed writing dataset: " + path);
}

Dataset load_dataset(const std::string& path, double diag_load, double spd_floor) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);
  Dataset out;
  std::string text;
  long line_no = 0;
  Eigen::Index dim = -1;
  Eigen::Index pred_len = -2;  // -2: unseen, -1: no predictors
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad JSON: ") + e.what(), line_no);
    }
    if (!doc.is_object() || !doc.contains("matrix")) {
      throw ParseError("record must be an object with a \"matrix\" field", line_no);
    }
    Matrix m = matrix_from_json(doc.at("matrix"), line_no);
    if (dim < 0) {
      dim = m.rows();
    } else if (m.rows() != dim) {
      std::ostringstream os;
      os << "matrix dimension " << m.rows() << " at line " << line_no
         << " differs from earlier dimension " << dim;
      throw InconsistentDimensionsError(os.str());
    }
    if (diag_load > 0.0) m += diag_load * Matrix::Identity(m.rows(), m.cols());
    SpdMatrix validated = [&] {
      try {
        return validate_spd(m, spd_floor);
      } catch (const Error& e) {
        throw ParseError(std::string("record failed SPD validation: ") + e.what(), line_no);
      }
    }();
    std::optional<Vector> preds;
    if (doc.contains("predictors")) {
      const json& p = doc.at("predictors");
      if (!p.is_array()) throw ParseError("predictors must be an array", line_no);
      Vector v(static_cast<Eigen::Index>(p.size()));
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (!p[i].is_number()) throw ParseError("predictors must be numbers", line_no);
        v[static_cast<Eigen::Index>(i)] = p[i].get<double>();
      }
      preds = std::move(v);
    }
    const Eigen::Index this_len = preds ? preds->size() : -1;
    if (pred_len == -2) {
      pred_len = this_len;
    } else if (this_len != pred_len) {
      std::ostringstream os;
      os << "predictor length " << this_len << " at line " << line_no
         << " differs from earlier length " << pred_len;
      throw InconsistentDimensionsError(os.str());
    }
    out.push_back(MatrixRecord{std::move(validated), std::move(preds)});
  }
  return out;
}

Standardization standardize_predictors(Dataset& dataset) {
  if (dataset.empty() || !dataset.front().predictors) {
    throw NoPredictorsError("standardize_predictors: dataset has no predictors");
  }
  const Eigen::Index p = dataset.front().predictors->size();
  for (const MatrixRecord& r : dataset) {
    if (!r.predictors || r.predictors->size() != p) {
      throw InconsistentDimensionsError("standardize_predictors: inconsistent predictor length");
    }
  }
  const double n = static_cast<double>(dataset.size());
  Standardization st;
  st.means = Vector::Zero(p);
  st.stds = Vector::Ones(p);
  for (const MatrixRecord& r : dataset) st.means += *r.predictors;
  st.means /= n;
  Vector var = Vector::Zero(p);
  for (const MatrixRecord& r : dataset) {
    const Vector d = *r.predictors - st.means;
    var += d.cwiseProduct(d);
  }
  var /= n;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (var[j] > 0.0) {
      st.stds[j] = std::sqrt(var[j]);
    } else {
      std::ostringstream os;
      os << "predictor column " << j << " has zero variance; standardized to 0";
      st.warnings.push_back(os.str());
    }
  }
  for (MatrixRecord& r : dataset) {
    Vector& v = *r.predictors;
    for (Eigen::Index j = 0; j < p; ++j) {
      v[j] = var[j] > 0.0 ? (v[j] - st.means[j]) / st.stds[j] : 0.0;
    }
  }
  return st;
}

void unstandardize_predictors(Dataset& dataset, const Standardization& st) {
  for (MatrixRecord& r : dataset) {
    if (!r.predictors || r.predictors->size() != st.means.size()) {
      throw InconsistentDimensionsError("unstandardize_predictors: predictor length mismatch");
    }
    Vector& v = *r.predictors;
    for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = v[j] * st.stds[j] + st.means[j];
  }
}

MetricsReport eval_mean_distance(const std::vector<SpdMatrix>& samples, const SpdMatrix& reference,
                                 Metric metric) {
  if (samples.empty()) throw EmptySampleSetError("eval_mean_distance: empty sample set");
  MetricsReport report;
  report.per_sample.reserve(samples.size());
  double sum_affine = 0.0, sum_frob = 0.0;
  for (const SpdMatrix& s : samples) {
    const double da = dist_affine(s, reference);
    const double df = dist_frobenius(s, reference);
    sum_affine += da;
    sum_frob += df;
    report.per_sample.push_back(metric == Metric::affine ? da : df);
  }
  report.mean_affine_distance = sum_affine / static_cast<double>(samples.size());
  report.mean_frobenius = sum_frob / static_cast<double>(samples.size());
  return report;
}

void write_metrics_csv(const std::string& path, const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open metrics csv for writing: " + path);
  out << "metric,value\n";
  out << "mean_affine_distance," << format_double(report.mean_affine_distance) << "\n";
  out << "mean_frobenius," << format_double(report.mean_frobenius) << "\n";
  out << "n_samples," << report.per_sample.size() << "\n";
  if (!out) throw IoError("failed writing metrics csv: " + path);
}

void export_heat_csv(const SpdMatrix& x, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open heatmap csv for writing: " + path);
  const Matrix& m = x.mat();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << format_double(m(i, j)) << (j + 1 < m.cols() ? "," : "");
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing heatmap csv: " + path);
}

void save_matrix_json(const std::string& path, const SpdMatrix& x) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open matrix file for writing: " + path);
  out << json{{"matrix", matrix_to_json(x.mat())}}.dump() << "\n";
  if (!out) throw IoError("failed writing matrix file: " + path);
}

SpdMatrix load_matrix_json(const std::string& path, double diag_load, double spd_floor) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad JSON: ") + e.what(), 1);
  }
  if (!doc.is_object() || !doc.contains("matrix")) {
    throw ParseError("expected an object with a \"matrix\" field", 1);
  }
  Matrix m = matrix_from_json(doc.at("matrix"), 1);
  if (diag_load > 0.0) m += diag_load * Matrix::Identity(m.rows(), m.cols());
  return validate_spd(m, spd_floor);
}

}  // namespace spdddpm
