#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spdddpm/gaussian.hpp"
#include "spdddpm/metric.hpp"
#include "spdddpm/rng.hpp"
#include "spdddpm/spd_matrix.hpp"

namespace spdddpm {

struct MatrixRecord {
  SpdMatrix matrix;
  std::optional<Vector> predictors;
};

using Dataset = std::vector<MatrixRecord>;

struct ToySpec {
  SpdMatrix center;
  double sigma = 0.1;
  int count = 0;

  void validate() const;
};

/// Default toy center: Haar frame around eigenvalues log-uniform in [0.5, 2].
SpdMatrix random_toy_center(int dim, Rng& rng);

/// spec.count independent draws from G(center, sigma^2); no predictors.
Dataset generate_toy(const ToySpec& spec, const EigenSamplerConfig& sampler_cfg, Rng& rng);

/// JSON-lines, one record per line:
///   {"matrix": [[...], ...], "predictors": [...]}
/// with predictors omitted where absent.  Doubles round-trip exactly.
void save_dataset(const std::string& path, const Dataset& dataset);

/// diag_load > 0 adds diag_load * I before validation (for near-singular
/// ingestion such as flow-count matrices).
Dataset load_dataset(const std::string& path, double diag_load = 0.0,
                     double spd_floor = kDefaultSpdFloor);

struct Standardization {
  Vector means;
  Vector stds;  // 1.0 recorded for zero-variance columns
  std::vector<std::string> warnings;
};

/// In-place column standardization of the predictors to mean 0 / std 1;
/// zero-variance columns become 0 with a warning.  Requires predictors on
/// every record.
Standardization standardize_predictors(Dataset& dataset);

/// Inverse of standardize_predictors given its returned statistics.
void unstandardize_predictors(Dataset& dataset, const Standardization& st);

struct MetricsReport {
  double mean_affine_distance = 0.0;
  double mean_frobenius = 0.0;
  std::vector<double> per_sample;  // under the metric passed to eval
};

MetricsReport eval_mean_distance(const std::vector<SpdMatrix>& samples, const SpdMatrix& reference,
                                 Metric metric);

/// CSV rows `metric,value` (header included) for the two means and the count.
void write_metrics_csv(const std::string& path, const MetricsReport& report);

/// Plain CSV of the matrix entries, one row per matrix row, full precision.
void export_heat_csv(const SpdMatrix& x, const std::string& path);

/// Reference matrix file: a single JSON object {"matrix": [[...]]}.
void save_matrix_json(const std::string& path, const SpdMatrix& x);
SpdMatrix load_matrix_json(const std::string& path, double diag_load = 0.0,
                           double spd_floor = kDefaultSpdFloor);

}  // namespace spdddpm
