#pragma once

#include <string>
#include <vector>

#include "nrc/classifier.hpp"
#include "nrc/data_io.hpp"

namespace nrc {

/// Full experiment description. Loadable from a human-editable key-value
/// file; every field has a CLI override.
struct ExperimentConfig {
  std::string manifest_path;
  CoderKind coder = CoderKind::Nnls;
  SolverConfig solver;
  std::size_t pca_dim = 0;  // 0 = no projection
  SplitSpec split;
  std::size_t cv_folds = 5;
  std::vector<double> rho_grid;     // NNLS hyperparameter grid
  std::vector<double> lambda_grid;  // ridge / lasso hyperparameter grid
  bool per_trial_cv = false;        // re-run CV on every trial's split
  bool timing = false;              // measure per-query prediction time

  static ExperimentConfig load(const std::string& path);
};

struct TrialResult {
  std::size_t index = 0;
  double accuracy = 0.0;
  double chosen_rho = 0.0;
  double chosen_lambda = 0.0;
  double time_mean_s = 0.0;
  double time_median_s = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;  // echo
  std::string dataset_name;
  std::vector<std::string> provenance;
  std::vector<TrialResult> trials;
  double mean_accuracy = 0.0;
  double stddev_accuracy = 0.0;  // sample stddev over trials, 0 for a single trial
  bool has_timing = false;
};

/// Picks the coder's hyperparameter (rho for NNLS, lambda for ridge/lasso)
/// by stratified k-fold cross validation on the training set: highest mean
/// fold accuracy wins, ties go to the smaller value. A single-value grid is
/// returned directly.
double cross_validate(const LabeledDataset& train, const ExperimentConfig& cfg);

/// Runs the multi-trial protocol: stratified sample, optional PCA fit on the
/// trial's training samples only, fit, batch predict on the held-out samples
/// (the declared test split, or the remainder when none is declared).
ExperimentReport run_experiment(const ExperimentConfig& cfg);

struct TimingStats {
  double mean_s = 0.0;
  double median_s = 0.0;
  std::size_t queries = 0;
};

/// Per-query wall-clock stats over the batch, single-threaded, after an
/// untimed warm-up of min(8, batch) queries. Fit time is excluded by
/// construction (the factorization is pre-stored in clf).
TimingStats time_query(const FittedClassifier& clf, const DenseMatrix& queries);

enum class ReportFormat { JsonLines, Csv };

ReportFormat report_format_from_name(const std::string& name);

/// Writes the report with a deterministic field order; two emissions of the
/// same report are byte-identical and numeric fields round-trip at full
/// precision. CSV carries the per-trial table; JSONL carries config echo,
/// trials, and summary.
void emit_report(const ExperimentReport& report, const std::string& path, ReportFormat format);

ExperimentReport parse_report(const std::string& path, ReportFormat format);

std::string format_summary(const ExperimentReport& report);

}  // namespace nrc
