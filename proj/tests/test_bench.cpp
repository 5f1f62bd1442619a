#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "nrc/bench.hpp"
#include "support/test_utils.hpp"

using namespace nrc;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_delimited_file(const std::string& path, const testutil::SyntheticClasses& data) {
  std::ofstream os(path, std::ios::binary);
  REQUIRE(os);
  char buf[64];
  for (std::size_t j = 0; j < data.features.cols(); ++j) {
    os << data.labels[j];
    for (std::size_t i = 0; i < data.features.rows(); ++i) {
      std::snprintf(buf, sizeof(buf), " %.17g", data.features(i, j));
      os << buf;
    }
    os << '\n';
  }
}

struct SyntheticFiles {
  std::string train = "bench_train.txt";
  std::string test = "bench_test.txt";
  std::string manifest = "bench.manifest";

  ~SyntheticFiles() {
    std::remove(train.c_str());
    std::remove(test.c_str());
    std::remove(manifest.c_str());
  }

  // well-separated 3-class data; when shuffle_test_labels is set the held-out
  // labels are permuted so any real signal must vanish
  void create(bool with_test, bool shuffle_test_labels = false) {
    testutil::Rng rng(404);
    const auto train_data = testutil::make_orthogonal_classes(rng, 6, 3, 12, 0.05);
    write_delimited_file(train, train_data);

    if (with_test) {
      auto test_data = testutil::make_orthogonal_classes(rng, 6, 3, 20, 0.05);
      if (shuffle_test_labels) {
        // deterministic shuffle of the labels only
        testutil::Rng lr(77);
        for (std::size_t i = test_data.labels.size(); i > 1; --i)
          std::swap(test_data.labels[i - 1], test_data.labels[lr.below(i)]);
      }
      write_delimited_file(test, test_data);
    }

    std::ofstream os(manifest, std::ios::binary);
    os << "name = synthetic\nformat = delimited\ntrain = " << train << "\n";
    if (with_test) os << "test = " << test << "\n";
    os << "classes = 3\n";
  }
};

ExperimentConfig base_config(const std::string& manifest) {
  ExperimentConfig cfg;
  cfg.manifest_path = manifest;
  cfg.coder = CoderKind::Nnls;
  cfg.solver.max_iters = 5;
  cfg.split.per_class = 6;
  cfg.split.seed = 11;
  cfg.split.trials = 3;
  cfg.rho_grid = {1.0};
  cfg.lambda_grid = {0.01};
  return cfg;
}

LabeledDataset separable_train() {
  testutil::Rng rng(500);
  auto data = testutil::make_orthogonal_classes(rng, 6, 3, 10, 0.05);
  return LabeledDataset::from_raw(std::move(data.features), data.labels);
}

}  // namespace

TEST_CASE("cross_validate returns a single grid value directly") {
  auto cfg = base_config("unused");
  cfg.rho_grid = {2.5};
  CHECK(cross_validate(separable_train(), cfg) == 2.5);
}

TEST_CASE("cross_validate picks the separating hyperparameter") {
  auto cfg = base_config("unused");
  cfg.coder = CoderKind::Lasso;
  cfg.solver.max_iters = 200;
  cfg.solver.tol = 1e-8;
  // a huge lambda kills every coefficient; the small one separates perfectly
  cfg.lambda_grid = {1e9, 0.001};
  CHECK(cross_validate(separable_train(), cfg) == 0.001);
}

TEST_CASE("cross_validate breaks ties toward the smaller value") {
  auto cfg = base_config("unused");
  cfg.rho_grid = {2.0, 1.0};  // both classify the separable set perfectly
  CHECK(cross_validate(separable_train(), cfg) == 1.0);
}

TEST_CASE("cross_validate wants enough samples per class") {
  auto cfg = base_config("unused");
  cfg.cv_folds = 20;
  cfg.rho_grid = {1.0, 2.0};
  CHECK_THROWS_AS(cross_validate(separable_train(), cfg), ClassTooSmall);
}

TEST_CASE("run_experiment is perfect on separable data") {
  SyntheticFiles files;
  files.create(/*with_test=*/true);
  const auto report = run_experiment(base_config(files.manifest));
  REQUIRE(report.trials.size() == 3);
  for (const auto& t : report.trials) {
    CHECK(t.accuracy == 1.0);
    CHECK(t.chosen_rho == 1.0);
  }
  CHECK(report.mean_accuracy == 1.0);
  CHECK(report.stddev_accuracy == 0.0);
  CHECK(report.dataset_name == "synthetic");
}

TEST_CASE("run_experiment uses the remainder when no test split is declared") {
  SyntheticFiles files;
  files.create(/*with_test=*/false);
  const auto report = run_experiment(base_config(files.manifest));
  REQUIRE(report.trials.size() == 3);
  for (const auto& t : report.trials) CHECK(t.accuracy == 1.0);
}

TEST_CASE("label-shuffled held-out data scores near chance") {
  SyntheticFiles files;
  files.create(/*with_test=*/true, /*shuffle_test_labels=*/true);
  auto cfg = base_config(files.manifest);
  cfg.split.trials = 2;
  const auto report = run_experiment(cfg);
  for (const auto& t : report.trials) {
    CHECK(t.accuracy >= 1.0 / 3.0 - 0.18);
    CHECK(t.accuracy <= 1.0 / 3.0 + 0.18);
  }
}

TEST_CASE("pca inside the protocol stays leakage-safe and accurate") {
  SyntheticFiles files;
  files.create(/*with_test=*/true);
  auto cfg = base_config(files.manifest);
  cfg.pca_dim = 3;
  const auto report = run_experiment(cfg);
  for (const auto& t : report.trials) CHECK(t.accuracy == 1.0);
}

TEST_CASE("trial errors carry the trial index") {
  SyntheticFiles files;
  files.create(/*with_test=*/true);
  auto cfg = base_config(files.manifest);
  cfg.split.per_class = 100;  // more than the pool holds
  CHECK_THROWS_WITH_AS(run_experiment(cfg), doctest::Contains("trial 0"), ClassTooSmall);
}

TEST_CASE("full-run determinism: byte-identical reports") {
  SyntheticFiles files;
  files.create(/*with_test=*/true);
  auto cfg = base_config(files.manifest);
  cfg.rho_grid = {0.5, 1.0, 2.0};  // exercise CV too

  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);

  emit_report(a, "det_a.jsonl", ReportFormat::JsonLines);
  emit_report(b, "det_b.jsonl", ReportFormat::JsonLines);
  emit_report(a, "det_a.csv", ReportFormat::Csv);
  emit_report(b, "det_b.csv", ReportFormat::Csv);
  CHECK(read_file("det_a.jsonl") == read_file("det_b.jsonl"));
  CHECK(read_file("det_a.csv") == read_file("det_b.csv"));

  // re-emitting the same report is also byte-identical
  emit_report(a, "det_a2.jsonl", ReportFormat::JsonLines);
  CHECK(read_file("det_a.jsonl") == read_file("det_a2.jsonl"));

  for (const char* f : {"det_a.jsonl", "det_b.jsonl", "det_a.csv", "det_b.csv", "det_a2.jsonl"})
    std::remove(f);
}

TEST_CASE("jsonl report round-trips all numeric fields") {
  SyntheticFiles files;
  files.create(/*with_test=*/true);
  auto cfg = base_config(files.manifest);
  cfg.timing = true;
  const auto report = run_experiment(cfg);

  emit_report(report, "rt.jsonl", ReportFormat::JsonLines);
  const auto back = parse_report("rt.jsonl", ReportFormat::JsonLines);
  std::remove("rt.jsonl");

  CHECK(back.mean_accuracy == report.mean_accuracy);
  CHECK(back.stddev_accuracy == report.stddev_accuracy);
  CHECK(back.config.split.seed == report.config.split.seed);
  CHECK(back.config.rho_grid == report.config.rho_grid);
  REQUIRE(back.trials.size() == report.trials.size());
  for (std::size_t i = 0; i < back.trials.size(); ++i) {
    CHECK(back.trials[i].accuracy == report.trials[i].accuracy);
    CHECK(back.trials[i].chosen_rho == report.trials[i].chosen_rho);
    CHECK(back.trials[i].time_mean_s == report.trials[i].time_mean_s);
    CHECK(back.trials[i].time_median_s == report.trials[i].time_median_s);
  }
}

TEST_CASE("csv report round-trips the trial table") {
  SyntheticFiles files;
  files.create(/*with_test=*/true);
  const auto report = run_experiment(base_config(files.manifest));

  emit_report(report, "rt.csv", ReportFormat::Csv);
  const auto back = parse_report("rt.csv", ReportFormat::Csv);
  std::remove("rt.csv");

  REQUIRE(back.trials.size() == report.trials.size());
  for (std::size_t i = 0; i < back.trials.size(); ++i) {
    CHECK(back.trials[i].index == report.trials[i].index);
    CHECK(back.trials[i].accuracy == report.trials[i].accuracy);
    CHECK(back.trials[i].chosen_rho == report.trials[i].chosen_rho);
    CHECK(back.trials[i].chosen_lambda == report.trials[i].chosen_lambda);
  }
  CHECK(back.mean_accuracy == report.mean_accuracy);
}

TEST_CASE("an empty report emits a header-only csv") {
  ExperimentReport empty;
  emit_report(empty, "empty.csv", ReportFormat::Csv);
  CHECK(read_file("empty.csv") == "trial,accuracy,chosen_rho,chosen_lambda\n");
  const auto back = parse_report("empty.csv", ReportFormat::Csv);
  CHECK(back.trials.empty());
  std::remove("empty.csv");
}

TEST_CASE("config file loading") {
  {
    std::ofstream os("exp.cfg");
    os << "# experiment\nmanifest = some.manifest\ncoder = ridge\nlambda = 0.25\n"
       << "per_class = 50\ntrials = 4\nseed = 9\ncv_folds = 5\n"
       << "lambda_grid = 0.001, 0.01, 0.1\ntiming = true\n";
  }
  const auto cfg = ExperimentConfig::load("exp.cfg");
  std::remove("exp.cfg");
  CHECK(cfg.coder == CoderKind::Ridge);
  CHECK(cfg.solver.lambda == 0.25);
  CHECK(cfg.split.per_class == 50);
  CHECK(cfg.split.trials == 4);
  CHECK(cfg.split.seed == 9);
  CHECK(cfg.lambda_grid == std::vector<double>{0.001, 0.01, 0.1});
  CHECK(cfg.timing);

  {
    std::ofstream os("bad.cfg");
    os << "manifest = m\nnot_a_key = 1\n";
  }
  CHECK_THROWS_AS(ExperimentConfig::load("bad.cfg"), InvalidConfig);
  std::remove("bad.cfg");
}

TEST_CASE("time_query basics") {
  testutil::Rng rng(600);
  auto data = testutil::make_orthogonal_classes(rng, 8, 2, 4, 0.05);
  const auto ds = LabeledDataset::from_raw(std::move(data.features), data.labels);
  const auto clf = fit(ds, CoderKind::Nnls, SolverConfig{});

  DenseMatrix one(8, 1);
  const auto q = testutil::noisy_query(rng, 8, 0, 0.05);
  std::copy(q.begin(), q.end(), one.col(0).begin());
  const auto ts = time_query(clf, one);
  CHECK(ts.queries == 1);
  CHECK(ts.mean_s == ts.median_s);
  CHECK(ts.mean_s >= 0.0);

  CHECK_THROWS_AS(time_query(clf, DenseMatrix(8, 0)), InvalidConfig);
}

TEST_CASE("doubling the iteration cap roughly doubles nnls query time") {
  testutil::Rng rng(601);
  auto data = testutil::make_orthogonal_classes(rng, 150, 4, 150, 0.05);
  const auto ds = LabeledDataset::from_raw(std::move(data.features), data.labels);

  SolverConfig base;
  base.max_iters = 25;
  base.tol = 1e-300;  // never converges early, every solve runs the full cap
  SolverConfig twice = base;
  twice.max_iters = 50;

  const auto clf25 = fit(ds, CoderKind::Nnls, base);
  const auto clf50 = fit(ds, CoderKind::Nnls, twice);

  DenseMatrix queries(150, 24);
  for (std::size_t j = 0; j < queries.cols(); ++j) {
    const auto q = testutil::noisy_query(rng, 150, j % 4, 0.05);
    std::copy(q.begin(), q.end(), queries.col(j).begin());
  }

  // medians over the same batch, best of three runs to shrug off scheduler
  // stalls; the ratio target is 2x with a +-50% band
  auto best_median = [&](const FittedClassifier& clf) {
    double best = 1e300;
    for (int rep = 0; rep < 3; ++rep) best = std::min(best, time_query(clf, queries).median_s);
    return best;
  };
  const double t25 = best_median(clf25);
  const double t50 = best_median(clf50);
  const double ratio = t50 / t25;
  CHECK(ratio >= 1.0);
  CHECK(ratio <= 3.0);
}
