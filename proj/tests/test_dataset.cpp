#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "helpers.hpp"
#include "spdddpm/dataset.hpp"
#include "spdddpm/metric.hpp"

using namespace spdddpm;
using testutil::max_abs_diff;
using testutil::random_spd;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string temp_path(const char* name) { return std::string("test_dataset_tmp_") + name; }

SpdMatrix spd_diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m.diagonal() << a, b;
  return validate_spd(m);
}

}  // namespace

TEST_CASE("metric names") {
  CHECK(parse_metric("affine") == Metric::affine);
  CHECK(parse_metric("frobenius") == Metric::frobenius);
  CHECK(metric_name(Metric::affine) == "affine");
  CHECK(metric_name(Metric::frobenius) == "frobenius");
  CHECK_THROWS_AS(parse_metric("euclidean"), ConfigError);
}

TEST_CASE("toy spec and center") {
  auto rng = make_rng(91);
  ToySpec spec{random_toy_center(3, rng), 0.1, 10};
  CHECK_NOTHROW(spec.validate());
  spec.sigma = 0.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.sigma = 0.1;
  spec.count = -1;
  CHECK_THROWS_AS(spec.validate(), ConfigError);

  for (int rep = 0; rep < 20; ++rep) {
    const SpdMatrix a = random_toy_center(3, rng);
    const auto dec = eig(a);
    for (int i = 0; i < 3; ++i) {
      CHECK(dec.lambda(i) >= 0.5 - 1e-12);
      CHECK(dec.lambda(i) <= 2.0 + 1e-12);
    }
  }
}

TEST_CASE("generate_toy") {
  auto rng = make_rng(92);
  const SpdMatrix center = random_toy_center(3, rng);
  const EigenSamplerConfig cfg;

  auto gen_rng = make_rng(93);
  const Dataset empty = generate_toy(ToySpec{center, 0.1, 0}, cfg, gen_rng);
  CHECK(empty.empty());

  auto gen_rng2 = make_rng(93);
  const Dataset ds = generate_toy(ToySpec{center, 0.01, 50}, cfg, gen_rng2);
  REQUIRE(ds.size() == 50);
  for (const auto& r : ds) {
    CHECK(!r.predictors.has_value());
    CHECK_NOTHROW(validate_spd(r.matrix.mat()));
    CHECK(dist_affine(r.matrix, center) < 0.05);
  }

  // Deterministic and independent of the worker count.
  setenv("SPDDDPM_THREADS", "1", 1);
  auto ra = make_rng(94);
  const Dataset a = generate_toy(ToySpec{center, 0.1, 16}, cfg, ra);
  setenv("SPDDDPM_THREADS", "4", 1);
  auto rb = make_rng(94);
  const Dataset b = generate_toy(ToySpec{center, 0.1, 16}, cfg, rb);
  unsetenv("SPDDDPM_THREADS");
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(max_abs_diff(a[i].matrix.mat(), b[i].matrix.mat()) == 0.0);
  }
}

TEST_CASE("toy spread grows with sigma") {
  auto rng = make_rng(95);
  const SpdMatrix center = random_toy_center(3, rng);
  const EigenSamplerConfig cfg;
  double last = 0.0;
  for (const double sigma : {0.05, 0.1, 0.2}) {
    auto grng = make_rng(96);
    const Dataset ds = generate_toy(ToySpec{center, sigma, 300}, cfg, grng);
    double mean = 0.0;
    for (const auto& r : ds) mean += dist_affine(r.matrix, center);
    mean /= static_cast<double>(ds.size());
    CHECK(mean > last);
    last = mean;
  }
}

TEST_CASE("dataset round trip") {
  auto rng = make_rng(97);
  Dataset ds;
  for (int i = 0; i < 5; ++i) {
    Vector y(2);
    y << 0.1 * i, -1.0 / (i + 1);
    ds.push_back(MatrixRecord{random_spd(2, rng), y});
  }

  const std::string p1 = temp_path("rt1.jsonl");
  const std::string p2 = temp_path("rt2.jsonl");
  save_dataset(p1, ds);
  const Dataset loaded = load_dataset(p1);
  REQUIRE(loaded.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(max_abs_diff(loaded[i].matrix.mat(), ds[i].matrix.mat()) == 0.0);
    REQUIRE(loaded[i].predictors.has_value());
    CHECK((*loaded[i].predictors - *ds[i].predictors).cwiseAbs().maxCoeff() == 0.0);
  }
  save_dataset(p2, loaded);
  CHECK(slurp(p1) == slurp(p2));

  // Records without predictors round-trip too.
  Dataset plain{MatrixRecord{random_spd(3, rng), std::nullopt}};
  save_dataset(p1, plain);
  const Dataset plain_loaded = load_dataset(p1);
  REQUIRE(plain_loaded.size() == 1);
  CHECK(!plain_loaded[0].predictors.has_value());

  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("load errors carry line numbers") {
  const std::string path = temp_path("bad.jsonl");

  spit(path, "{\"matrix\": [[1.0]]}\nnot json at all\n");
  try {
    (void)load_dataset(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line_number == 2);
  }

  spit(path, "{\"matrix\": [[1.0, 0.0]]}\n");
  try {
    (void)load_dataset(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line_number == 1);
  }

  spit(path, "{\"matrix\": [[2.0, 0.0], [0.0]]}\n");
  CHECK_THROWS_AS((void)load_dataset(path), ParseError);

  spit(path, "[1, 2, 3]\n");
  CHECK_THROWS_AS((void)load_dataset(path), ParseError);

  spit(path, "{\"matrix\": [[1.0, 0.0], [0.0, 1.0]], \"predictors\": \"x\"}\n");
  CHECK_THROWS_AS((void)load_dataset(path), ParseError);

  // Non-SPD record: named line, wrapped as a parse failure.
  spit(path, "{\"matrix\": [[1.0, 0.0], [0.0, 1.0]]}\n{\"matrix\": [[1.0, 0.0], [0.0, -1.0]]}\n");
  try {
    (void)load_dataset(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line_number == 2);
  }

  CHECK_THROWS_AS((void)load_dataset("no_such_dataset.jsonl"), IoError);
  std::remove(path.c_str());
}

TEST_CASE("dimension and predictor drift") {
  const std::string path = temp_path("drift.jsonl");

  spit(path,
       "{\"matrix\": [[1.0, 0.0], [0.0, 1.0]]}\n"
       "{\"matrix\": [[1.0]]}\n");
  CHECK_THROWS_AS((void)load_dataset(path), InconsistentDimensionsError);

  spit(path,
       "{\"matrix\": [[1.0]], \"predictors\": [1.0, 2.0, 3.0]}\n"
       "{\"matrix\": [[1.0]], \"predictors\": [1.0, 2.0]}\n");
  CHECK_THROWS_AS((void)load_dataset(path), InconsistentDimensionsError);

  spit(path,
       "{\"matrix\": [[1.0]], \"predictors\": [1.0]}\n"
       "{\"matrix\": [[1.0]]}\n");
  CHECK_THROWS_AS((void)load_dataset(path), InconsistentDimensionsError);

  std::remove(path.c_str());
}

TEST_CASE("diagonal loading rescues near-singular records") {
  const std::string path = temp_path("singular.jsonl");
  spit(path, "{\"matrix\": [[0.0, 0.0], [0.0, 1.0]]}\n");
  CHECK_THROWS_AS((void)load_dataset(path), ParseError);
  const Dataset ds = load_dataset(path, 1e-3);
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].matrix.mat()(0, 0) == doctest::Approx(1e-3));
  CHECK(ds[0].matrix.mat()(1, 1) == doctest::Approx(1.001));
  std::remove(path.c_str());
}

TEST_CASE("standardize and unstandardize predictors") {
  Dataset ds;
  auto rng = make_rng(98);
  for (const double v : {1.0, 3.0}) {
    Vector y(2);
    y << v, 7.0;  // second column constant
    ds.push_back(MatrixRecord{random_spd(2, rng), y});
  }
  Dataset original = ds;

  const Standardization st = standardize_predictors(ds);
  CHECK((*ds[0].predictors)[0] == doctest::Approx(-1.0));
  CHECK((*ds[1].predictors)[0] == doctest::Approx(1.0));
  CHECK((*ds[0].predictors)[1] == 0.0);
  CHECK((*ds[1].predictors)[1] == 0.0);
  CHECK(st.means[0] == doctest::Approx(2.0));
  CHECK(st.stds[0] == doctest::Approx(1.0));
  CHECK(st.stds[1] == 1.0);  // recorded as 1 for the degenerate column
  REQUIRE(st.warnings.size() == 1);
  CHECK(st.warnings[0].find("column 1") != std::string::npos);

  unstandardize_predictors(ds, st);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK((*ds[i].predictors - *original[i].predictors).cwiseAbs().maxCoeff() < 1e-12);
  }

  Dataset no_preds{MatrixRecord{random_spd(2, rng), std::nullopt}};
  CHECK_THROWS_AS(standardize_predictors(no_preds), NoPredictorsError);
}

TEST_CASE("eval_mean_distance") {
  const SpdMatrix ref = SpdMatrix::Identity(2);
  const auto self = eval_mean_distance({ref}, ref, Metric::affine);
  CHECK(self.mean_affine_distance == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(self.mean_frobenius == doctest::Approx(0.0).epsilon(1e-12));

  // Samples at affine distances 2 and 4 from the identity.
  const SpdMatrix s1 = spd_diag2(std::exp(2.0), 1.0);
  const SpdMatrix s2 = spd_diag2(std::exp(4.0), 1.0);
  const auto report = eval_mean_distance({s1, s2}, ref, Metric::affine);
  CHECK(report.mean_affine_distance == doctest::Approx(3.0).epsilon(1e-10));
  REQUIRE(report.per_sample.size() == 2);
  CHECK(report.per_sample[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(report.per_sample[1] == doctest::Approx(4.0).epsilon(1e-10));

  // Hand-computed loop over a 10-sample set, both metrics.
  auto rng = make_rng(99);
  std::vector<SpdMatrix> samples;
  for (int i = 0; i < 10; ++i) samples.push_back(random_spd(2, rng));
  const SpdMatrix center = random_spd(2, rng);
  double sum_a = 0.0, sum_f = 0.0;
  for (const auto& s : samples) {
    sum_a += dist_affine(s, center);
    sum_f += dist_frobenius(s, center);
  }
  const auto rep = eval_mean_distance(samples, center, Metric::frobenius);
  CHECK(rep.mean_affine_distance == doctest::Approx(sum_a / 10.0).epsilon(1e-12));
  CHECK(rep.mean_frobenius == doctest::Approx(sum_f / 10.0).epsilon(1e-12));
  CHECK(rep.per_sample[3] == doctest::Approx(dist_frobenius(samples[3], center)).epsilon(1e-12));

  CHECK_THROWS_AS(eval_mean_distance({}, ref, Metric::affine), EmptySampleSetError);
}

TEST_CASE("metrics CSV content") {
  MetricsReport report;
  report.mean_affine_distance = 3.0;
  report.mean_frobenius = 1.5;
  report.per_sample = {1.0, 2.0};
  const std::string path = temp_path("metrics.csv");
  write_metrics_csv(path, report);
  CHECK(slurp(path) == "metric,value\nmean_affine_distance,3\nmean_frobenius,1.5\nn_samples,2\n");
  std::remove(path.c_str());
}

TEST_CASE("heatmap CSV") {
  const std::string path = temp_path("heat.csv");
  export_heat_csv(SpdMatrix::Identity(2), path);
  CHECK(slurp(path) == "1,0\n0,1\n");

  auto rng = make_rng(100);
  const SpdMatrix x = random_spd(3, rng);
  export_heat_csv(x, path);
  // Round-trip parse equals X, and row/column counts equal m.
  std::ifstream in(path);
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string cell;
    int col = 0;
    while (std::getline(ls, cell, ',')) {
      CHECK(std::stod(cell) == x.mat()(row, col));
      ++col;
    }
    CHECK(col == 3);
    ++row;
  }
  CHECK(row == 3);
  std::remove(path.c_str());
}

TEST_CASE("matrix JSON file round trip") {
  auto rng = make_rng(101);
  const SpdMatrix x = random_spd(3, rng);
  const std::string path = temp_path("center.json");
  save_matrix_json(path, x);
  const SpdMatrix loaded = load_matrix_json(path);
  CHECK(max_abs_diff(loaded.mat(), x.mat()) == 0.0);

  spit(path, "{\"no_matrix\": 1}");
  CHECK_THROWS_AS((void)load_matrix_json(path), ParseError);
  spit(path, "garbage");
  CHECK_THROWS_AS((void)load_matrix_json(path), ParseError);
  CHECK_THROWS_AS((void)load_matrix_json("no_such_matrix.json"), IoError);

  spit(path, "{\"matrix\": [[0.0, 0.0], [0.0, 1.0]]}");
  CHECK_THROWS_AS((void)load_matrix_json(path), Error);
  const SpdMatrix rescued = load_matrix_json(path, 1e-3);
  CHECK(rescued.mat()(0, 0) == doctest::Approx(1e-3));
  std::remove(path.c_str());
}
