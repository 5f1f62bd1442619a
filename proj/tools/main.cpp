#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "nrc/bench.hpp"
#include "nrc/classifier.hpp"
#include "nrc/data_io.hpp"

namespace {

struct SolverFlags {
  double rho = 1.0;
  double lambda = 0.0;
  std::size_t max_iters = 5;
  double tol = 1e-6;
};

void add_solver_flags(CLI::App* app, SolverFlags& f) {
  app->add_option("--rho", f.rho, "ADMM penalty rho");
  app->add_option("--lambda", f.lambda, "ridge / lasso regularization weight");
  app->add_option("--iters,--max-iters", f.max_iters, "iteration cap T");
  app->add_option("--tol", f.tol, "convergence tolerance");
}

nrc::SolverConfig to_config(const SolverFlags& f) {
  nrc::SolverConfig cfg;
  cfg.rho = f.rho;
  cfg.lambda = f.lambda;
  cfg.max_iters = f.max_iters;
  cfg.tol = f.tol;
  return cfg;
}

// Training matrix for fit/cv: stratified sample when per_class > 0, the whole
// training split otherwise.
nrc::LabeledDataset training_set(const nrc::DatasetManifest& manifest, std::size_t per_class,
                                 std::uint64_t seed, std::size_t trial) {
  nrc::RawDataset pool = nrc::load_split(manifest, "train");
  if (per_class == 0)
    return nrc::LabeledDataset::from_raw(std::move(pool.features), pool.labels);
  nrc::SplitSpec spec;
  spec.per_class = per_class;
  spec.seed = seed;
  return nrc::stratified_sample(pool, spec, trial).first;
}

int run_fit(const std::string& manifest_path, const std::string& coder_name,
            const SolverFlags& flags, std::size_t pca_dim, std::size_t per_class,
            std::uint64_t seed, std::size_t trial, const std::string& out) {
  const auto manifest = nrc::DatasetManifest::load(manifest_path);
  nrc::LabeledDataset train = training_set(manifest, per_class, seed, trial);

  std::optional<nrc::PcaModel> pca;
  if (pca_dim > 0) {
    pca = nrc::pca_fit(train.features, pca_dim);
    nrc::DenseMatrix projected = nrc::pca_transform(*pca, train.features);
    train.features = std::move(projected);
  }

  const nrc::FittedClassifier clf =
      nrc::fit(train, nrc::coder_from_name(coder_name), to_config(flags));
  nrc::save_model(out, clf, pca ? &*pca : nullptr);
  std::cout << "model: " << out << " (D=" << clf.dim() << ", N=" << clf.count()
            << ", K=" << clf.classes() << ", coder=" << coder_name << ")\n";
  return 0;
}

int run_predict(const std::string& model_path, const std::string& manifest_path,
                const std::string& split, const std::string& out) {
  const nrc::LoadedModel model = nrc::load_model(model_path);
  const auto manifest = nrc::DatasetManifest::load(manifest_path);
  const nrc::RawDataset data = nrc::load_split(manifest, split);

  nrc::DenseMatrix feats =
      model.pca ? nrc::pca_transform(*model.pca, data.features) : data.features;
  const auto preds = nrc::predict_batch(model.classifier, feats);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out.empty()) {
    file.open(out, std::ios::binary);
    if (!file) throw nrc::IoError("cannot open '" + out + "' for writing");
    os = &file;
  }
  const bool have_truth = !data.labels.empty();
  *os << (have_truth ? "index,predicted,actual\n" : "index,predicted\n");
  std::size_t hit = 0;
  for (std::size_t j = 0; j < preds.size(); ++j) {
    const int value = model.classifier.class_value(preds[j].label);
    *os << j << ',' << value;
    if (have_truth) {
      *os << ',' << data.labels[j];
      if (value == data.labels[j]) ++hit;
    }
    *os << '\n';
  }
  if (have_truth && !preds.empty())
    std::cerr << "accuracy: " << static_cast<double>(hit) / static_cast<double>(preds.size())
              << " on " << preds.size() << " samples\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"representation-based classification: NNLS (ADMM), ridge, and lasso coders"};
  app.require_subcommand(1);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit a classifier and save the model");
  std::string fit_manifest, fit_coder = "nnls", fit_out = "model.nrcm";
  SolverFlags fit_flags;
  std::size_t fit_pca = 0, fit_per_class = 0, fit_trial = 0;
  std::uint64_t fit_seed = 0;
  fit_cmd->add_option("--manifest", fit_manifest, "dataset manifest path")->required();
  fit_cmd->add_option("--coder", fit_coder, "nnls | ridge | lasso");
  add_solver_flags(fit_cmd, fit_flags);
  fit_cmd->add_option("--pca", fit_pca, "PCA projection dimension (0 = none)");
  fit_cmd->add_option("--per-class", fit_per_class, "training samples per class (0 = all)");
  fit_cmd->add_option("--seed", fit_seed, "sampling seed");
  fit_cmd->add_option("--trial", fit_trial, "sampling trial index");
  fit_cmd->add_option("--out,-o", fit_out, "output model path");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "predict labels with a saved model");
  std::string pred_model, pred_manifest, pred_split = "test", pred_out;
  predict_cmd->add_option("--model", pred_model, "model path")->required();
  predict_cmd->add_option("--manifest", pred_manifest, "dataset manifest path")->required();
  predict_cmd->add_option("--split", pred_split, "train | test");
  predict_cmd->add_option("--out,-o", pred_out, "output csv (default stdout)");

  // cv
  auto* cv_cmd = app.add_subcommand("cv", "cross-validate the coder hyperparameter");
  std::string cv_manifest, cv_coder = "nnls", cv_rho_grid, cv_lambda_grid;
  SolverFlags cv_flags;
  std::size_t cv_folds = 5, cv_per_class = 0, cv_pca = 0;
  std::uint64_t cv_seed = 0;
  cv_cmd->add_option("--manifest", cv_manifest, "dataset manifest path")->required();
  cv_cmd->add_option("--coder", cv_coder, "nnls | ridge | lasso");
  add_solver_flags(cv_cmd, cv_flags);
  cv_cmd->add_option("--folds", cv_folds, "number of folds");
  cv_cmd->add_option("--rho-grid", cv_rho_grid, "comma-separated rho grid (nnls)");
  cv_cmd->add_option("--lambda-grid", cv_lambda_grid, "comma-separated lambda grid (ridge/lasso)");
  cv_cmd->add_option("--per-class", cv_per_class, "training samples per class (0 = all)");
  cv_cmd->add_option("--pca", cv_pca, "PCA projection dimension (0 = none)");
  cv_cmd->add_option("--seed", cv_seed, "sampling seed");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "run the multi-trial experiment protocol");
  std::string bench_config, bench_out = "report.jsonl", bench_format = "jsonl";
  std::string bench_manifest, bench_coder;
  SolverFlags bench_flags;
  bool bench_timing = false;
  std::size_t bench_per_class = 0, bench_trials = 0, bench_pca = 0;
  std::int64_t bench_seed = -1;
  bench_cmd->add_option("--config", bench_config, "experiment config file");
  bench_cmd->add_option("--manifest", bench_manifest, "override: dataset manifest");
  bench_cmd->add_option("--coder", bench_coder, "override: coder kind");
  add_solver_flags(bench_cmd, bench_flags);
  bench_cmd->add_option("--per-class", bench_per_class, "override: samples per class");
  bench_cmd->add_option("--trials", bench_trials, "override: trial count");
  bench_cmd->add_option("--pca", bench_pca, "override: PCA dimension");
  bench_cmd->add_option("--seed", bench_seed, "override: sampling seed");
  bench_cmd->add_flag("--timing", bench_timing, "measure per-query prediction time");
  bench_cmd->add_option("--out,-o", bench_out, "report output path");
  bench_cmd->add_option("--format", bench_format, "jsonl | csv");

  // report
  auto* report_cmd = app.add_subcommand("report", "summarize or convert a report");
  std::string rep_in, rep_in_format = "jsonl", rep_out, rep_out_format = "csv";
  report_cmd->add_option("--in", rep_in, "report path")->required();
  report_cmd->add_option("--in-format", rep_in_format, "jsonl | csv");
  report_cmd->add_option("--out,-o", rep_out, "converted report path (optional)");
  report_cmd->add_option("--format", rep_out_format, "output format: jsonl | csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors -> 1, --help -> 0
  }

  try {
    if (fit_cmd->parsed())
      return run_fit(fit_manifest, fit_coder, fit_flags, fit_pca, fit_per_class, fit_seed,
                     fit_trial, fit_out);

    if (predict_cmd->parsed())
      return run_predict(pred_model, pred_manifest, pred_split, pred_out);

    if (cv_cmd->parsed()) {
      const auto manifest = nrc::DatasetManifest::load(cv_manifest);
      nrc::ExperimentConfig cfg;
      cfg.manifest_path = cv_manifest;
      cfg.coder = nrc::coder_from_name(cv_coder);
      cfg.solver = to_config(cv_flags);
      cfg.cv_folds = cv_folds;
      cfg.pca_dim = cv_pca;
      cfg.split.seed = cv_seed;
      if (!cv_rho_grid.empty()) {
        std::stringstream ss(cv_rho_grid);
        std::string tok;
        while (std::getline(ss, tok, ',')) cfg.rho_grid.push_back(std::stod(tok));
      }
      if (!cv_lambda_grid.empty()) {
        std::stringstream ss(cv_lambda_grid);
        std::string tok;
        while (std::getline(ss, tok, ',')) cfg.lambda_grid.push_back(std::stod(tok));
      }
      const nrc::LabeledDataset train = training_set(manifest, cv_per_class, cv_seed, 0);
      const double chosen = nrc::cross_validate(train, cfg);
      std::cout << (cfg.coder == nrc::CoderKind::Nnls ? "chosen_rho=" : "chosen_lambda=")
                << chosen << '\n';
      return 0;
    }

    if (bench_cmd->parsed()) {
      nrc::ExperimentConfig cfg;
      if (!bench_config.empty()) cfg = nrc::ExperimentConfig::load(bench_config);
      if (!bench_manifest.empty()) cfg.manifest_path = bench_manifest;
      if (!bench_coder.empty()) cfg.coder = nrc::coder_from_name(bench_coder);
      if (bench_cmd->count("--rho")) cfg.solver.rho = bench_flags.rho;
      if (bench_cmd->count("--lambda")) cfg.solver.lambda = bench_flags.lambda;
      if (bench_cmd->count("--iters")) cfg.solver.max_iters = bench_flags.max_iters;
      if (bench_cmd->count("--tol")) cfg.solver.tol = bench_flags.tol;
      if (bench_per_class > 0) cfg.split.per_class = bench_per_class;
      if (bench_trials > 0) cfg.split.trials = bench_trials;
      if (bench_pca > 0) cfg.pca_dim = bench_pca;
      if (bench_seed >= 0) cfg.split.seed = static_cast<std::uint64_t>(bench_seed);
      if (bench_timing) cfg.timing = true;
      // no grid declared: pin the grid to the explicit value, skipping CV
      if (cfg.rho_grid.empty()) cfg.rho_grid = {cfg.solver.rho};
      if (cfg.lambda_grid.empty()) cfg.lambda_grid = {cfg.solver.lambda};

      const nrc::ExperimentReport report = nrc::run_experiment(cfg);
      nrc::emit_report(report, bench_out, nrc::report_format_from_name(bench_format));
      std::cout << nrc::format_summary(report);
      std::cout << "report: " << bench_out << '\n';
      return 0;
    }

    if (report_cmd->parsed()) {
      const nrc::ExperimentReport report =
          nrc::parse_report(rep_in, nrc::report_format_from_name(rep_in_format));
      if (!rep_out.empty())
        nrc::emit_report(report, rep_out, nrc::report_format_from_name(rep_out_format));
      std::cout << nrc::format_summary(report);
      return 0;
    }
  } catch (const nrc::InvalidConfig& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const nrc::NotPositiveDefinite& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const nrc::Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
