#include "nrc/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "json.hpp"
#include "nrc/rng.hpp"

namespace nrc {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    while (end && (*end == ' ' || *end == '\t')) ++end;
    if (end == begin || *end != '\0')
      throw InvalidConfig("grid: '" + tok + "' is not a number");
    grid.push_back(v);
  }
  return grid;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw InvalidConfig(key + ": expected a boolean, got '" + v + "'");
}

std::string resolve_near(const std::string& base_file, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_file).parent_path() / p).string();
}

// shortest representation that parses back to the same double
std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  auto kv = detail::read_key_values(path);
  ExperimentConfig cfg;

  auto take = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  if (auto v = take("manifest")) cfg.manifest_path = resolve_near(path, *v);
  if (auto v = take("coder")) cfg.coder = coder_from_name(*v);
  if (auto v = take("rho")) cfg.solver.rho = std::stod(*v);
  if (auto v = take("lambda")) cfg.solver.lambda = std::stod(*v);
  if (auto v = take("max_iters")) cfg.solver.max_iters = std::stoul(*v);
  if (auto v = take("tol")) cfg.solver.tol = std::stod(*v);
  if (auto v = take("pca_dim")) cfg.pca_dim = std::stoul(*v);
  if (auto v = take("per_class")) cfg.split.per_class = std::stoul(*v);
  if (auto v = take("seed")) cfg.split.seed = std::stoull(*v);
  if (auto v = take("trials")) cfg.split.trials = std::stoul(*v);
  if (auto v = take("cv_folds")) cfg.cv_folds = std::stoul(*v);
  if (auto v = take("rho_grid")) cfg.rho_grid = parse_grid(*v);
  if (auto v = take("lambda_grid")) cfg.lambda_grid = parse_grid(*v);
  if (auto v = take("per_trial_cv")) cfg.per_trial_cv = parse_bool(*v, "per_trial_cv");
  if (auto v = take("timing")) cfg.timing = parse_bool(*v, "timing");

  if (!kv.empty()) throw InvalidConfig("config: unknown key '" + kv.begin()->first + "'");
  if (cfg.manifest_path.empty()) throw InvalidConfig("config: 'manifest' is required");
  return cfg;
}

namespace {

LabeledDataset with_features(const LabeledDataset& ds, DenseMatrix features) {
  if (features.cols() != ds.count())
    throw DimensionMismatch("with_features: column count changed");
  LabeledDataset out = ds;
  out.features = std::move(features);
  return out;
}

LabeledDataset subset(const LabeledDataset& ds, const std::vector<std::size_t>& cols) {
  DenseMatrix f(ds.features.rows(), cols.size());
  std::vector<int> values;
  values.reserve(cols.size());
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const auto src = ds.features.col(cols[k]);
    std::copy(src.begin(), src.end(), f.col(k).begin());
    values.push_back(ds.class_values[static_cast<std::size_t>(ds.labels[cols[k]])]);
  }
  return LabeledDataset::from_raw(std::move(f), values);
}

SolverConfig with_hyperparameter(SolverConfig solver, CoderKind coder, double value) {
  if (coder == CoderKind::Nnls)
    solver.rho = value;
  else
    solver.lambda = value;
  return solver;
}

// fraction of queries whose predicted class value equals the true value
double accuracy_on(const FittedClassifier& clf, const DenseMatrix& queries,
                   const std::vector<int>& true_values) {
  const auto preds = predict_batch(clf, queries);
  std::size_t hit = 0;
  for (std::size_t j = 0; j < preds.size(); ++j)
    if (clf.class_value(preds[j].label) == true_values[j]) ++hit;
  return preds.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(preds.size());
}

std::vector<int> original_values(const LabeledDataset& ds) {
  std::vector<int> values(ds.count());
  for (std::size_t j = 0; j < ds.count(); ++j)
    values[j] = ds.class_values[static_cast<std::size_t>(ds.labels[j])];
  return values;
}

constexpr std::uint64_t kCvSeedSalt = 0x517cc1b727220a95ull;

}  // namespace

double cross_validate(const LabeledDataset& train, const ExperimentConfig& cfg) {
  const auto& raw_grid = cfg.coder == CoderKind::Nnls ? cfg.rho_grid : cfg.lambda_grid;
  if (raw_grid.empty())
    throw InvalidConfig("cross_validate: the hyperparameter grid is empty");
  std::vector<double> grid = raw_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.size() == 1) return grid[0];

  const std::size_t folds = cfg.cv_folds;
  if (folds < 2) throw InvalidConfig("cross_validate: cv_folds must be >= 2");
  for (std::size_t k = 0; k < train.classes(); ++k)
    if (train.class_index[k].size() < folds)
      throw ClassTooSmall("cross_validate: class value " +
                          std::to_string(train.class_values[k]) + " has " +
                          std::to_string(train.class_index[k].size()) +
                          " samples, need >= " + std::to_string(folds));

  // stratified fold assignment, one shuffled chunk split per class
  std::vector<std::size_t> fold_of(train.count());
  for (std::size_t k = 0; k < train.classes(); ++k) {
    std::vector<std::size_t> idx = train.class_index[k];
    SplitMix64 rng(stream_seed(cfg.split.seed ^ kCvSeedSalt, 0, train.class_values[k]));
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.bounded(i + 1));
      std::swap(idx[i], idx[j]);
    }
    for (std::size_t pos = 0; pos < idx.size(); ++pos)
      fold_of[idx[pos]] = pos * folds / idx.size();
  }

  std::vector<std::vector<std::size_t>> fold_cols(folds), rest_cols(folds);
  for (std::size_t j = 0; j < train.count(); ++j) {
    fold_cols[fold_of[j]].push_back(j);
    for (std::size_t f = 0; f < folds; ++f)
      if (f != fold_of[j]) rest_cols[f].push_back(j);
  }

  double best_value = grid[0];
  double best_mean = -1.0;
  for (const double value : grid) {
    const SolverConfig solver = with_hyperparameter(cfg.solver, cfg.coder, value);
    double acc_sum = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
      LabeledDataset part = subset(train, rest_cols[f]);
      LabeledDataset held = subset(train, fold_cols[f]);
      DenseMatrix held_feats = held.features;
      if (cfg.pca_dim > 0) {
        const PcaModel pca = pca_fit(part.features, cfg.pca_dim);
        part = with_features(part, pca_transform(pca, part.features));
        held_feats = pca_transform(pca, held.features);
      }
      const FittedClassifier clf = fit(part, cfg.coder, solver);
      acc_sum += accuracy_on(clf, held_feats, original_values(held));
    }
    const double mean = acc_sum / static_cast<double>(folds);
    if (mean > best_mean) {  // strict: ties keep the smaller grid value
      best_mean = mean;
      best_value = value;
    }
  }
  return best_value;
}

namespace {

template <typename Fn>
auto with_trial_context(std::size_t trial, Fn&& fn) {
  const std::string prefix = "trial " + std::to_string(trial) + ": ";
  try {
    return fn();
  } catch (const NotPositiveDefinite& e) {
    throw NotPositiveDefinite(prefix + e.what());
  } catch (const InvalidConfig& e) {
    throw InvalidConfig(prefix + e.what());
  } catch (const ClassTooSmall& e) {
    throw ClassTooSmall(prefix + e.what());
  } catch (const ZeroNormSample& e) {
    throw ZeroNormSample(prefix + e.what());
  } catch (const ZeroNormQuery& e) {
    throw ZeroNormQuery(prefix + e.what());
  } catch (const EmptyClass& e) {
    throw EmptyClass(prefix + e.what());
  } catch (const DimensionMismatch& e) {
    throw DimensionMismatch(prefix + e.what());
  } catch (const IoError& e) {
    throw IoError(prefix + e.what());
  } catch (const Error& e) {
    throw Error(prefix + e.what());
  }
}

void finalize_stats(ExperimentReport& report) {
  const std::size_t n = report.trials.size();
  if (n == 0) {
    report.mean_accuracy = 0.0;
    report.stddev_accuracy = 0.0;
    return;
  }
  double sum = 0.0;
  for (const auto& t : report.trials) sum += t.accuracy;
  report.mean_accuracy = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& t : report.trials) {
    const double d = t.accuracy - report.mean_accuracy;
    ss += d * d;
  }
  report.stddev_accuracy = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
}

constexpr std::size_t kTimedQueryCap = 200;

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  validate(cfg.solver);
  if (cfg.split.trials < 1) throw InvalidConfig("experiment: trials must be >= 1");
  if (cfg.manifest_path.empty()) throw InvalidConfig("experiment: manifest path is empty");

  const DatasetManifest manifest = DatasetManifest::load(cfg.manifest_path);
  const RawDataset pool = load_split(manifest, "train");
  std::optional<LabeledDataset> fixed_test;
  std::string test_source;
  if (has_split(manifest, "test")) {
    RawDataset raw = load_split(manifest, "test");
    test_source = raw.source;
    fixed_test = LabeledDataset::from_raw(std::move(raw.features), raw.labels);
  }

  ExperimentReport report;
  report.config = cfg;
  report.dataset_name = manifest.name.empty() ? cfg.manifest_path : manifest.name;
  report.provenance.push_back("manifest: " + cfg.manifest_path);
  report.provenance.push_back("train: " + pool.source);
  if (fixed_test)
    report.provenance.push_back("test: " + test_source);
  else
    report.provenance.push_back("test: remainder of the training pool");
  report.has_timing = cfg.timing;

  double chosen = 0.0;
  for (std::size_t trial = 0; trial < cfg.split.trials; ++trial) {
    with_trial_context(trial, [&] {
      auto [train, rest] = stratified_sample(pool, cfg.split, trial);
      if (trial == 0 || cfg.per_trial_cv) chosen = cross_validate(train, cfg);
      const SolverConfig solver = with_hyperparameter(cfg.solver, cfg.coder, chosen);

      const LabeledDataset& test = fixed_test ? *fixed_test : rest;
      DenseMatrix test_feats;
      if (cfg.pca_dim > 0) {
        const PcaModel pca = pca_fit(train.features, cfg.pca_dim);  // training statistics only
        train = with_features(train, pca_transform(pca, train.features));
        test_feats = pca_transform(pca, test.features);
      } else {
        test_feats = test.features;
      }

      const FittedClassifier clf = fit(train, cfg.coder, solver);

      TrialResult tr;
      tr.index = trial;
      tr.accuracy = accuracy_on(clf, test_feats, original_values(test));
      tr.chosen_rho = solver.rho;
      tr.chosen_lambda = solver.lambda;
      if (cfg.timing && test_feats.cols() > 0) {
        const std::size_t m = std::min(kTimedQueryCap, test_feats.cols());
        DenseMatrix timed(test_feats.rows(), m);
        std::copy(test_feats.data().begin(),
                  test_feats.data().begin() + static_cast<std::ptrdiff_t>(m * test_feats.rows()),
                  timed.data().begin());
        const TimingStats ts = time_query(clf, timed);
        tr.time_mean_s = ts.mean_s;
        tr.time_median_s = ts.median_s;
      }
      report.trials.push_back(tr);
    });
  }

  finalize_stats(report);
  return report;
}

TimingStats time_query(const FittedClassifier& clf, const DenseMatrix& queries) {
  if (queries.cols() == 0) throw InvalidConfig("time_query: need at least one query");
  using clock = std::chrono::steady_clock;

  auto one = [&](std::size_t j) {
    const auto q = queries.col(j);
    return predict(clf, Vector(q.begin(), q.end()));
  };

  const std::size_t warmup = std::min<std::size_t>(8, queries.cols());
  for (std::size_t j = 0; j < warmup; ++j) (void)one(j);

  std::vector<double> seconds(queries.cols());
  for (std::size_t j = 0; j < queries.cols(); ++j) {
    const auto t0 = clock::now();
    (void)one(j);
    const auto t1 = clock::now();
    seconds[j] = std::chrono::duration<double>(t1 - t0).count();
  }

  TimingStats ts;
  ts.queries = seconds.size();
  double sum = 0.0;
  for (double s : seconds) sum += s;
  ts.mean_s = sum / static_cast<double>(seconds.size());
  std::vector<double> sorted = seconds;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  ts.median_s = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return ts;
}

ReportFormat report_format_from_name(const std::string& name) {
  if (name == "jsonl" || name == "json-lines") return ReportFormat::JsonLines;
  if (name == "csv") return ReportFormat::Csv;
  throw InvalidConfig("unknown report format '" + name + "' (expected jsonl or csv)");
}

namespace {

ordered_json config_record(const ExperimentReport& r) {
  const ExperimentConfig& c = r.config;
  ordered_json j;
  j["record"] = "config";
  j["dataset"] = r.dataset_name;
  j["manifest"] = c.manifest_path;
  j["coder"] = coder_name(c.coder);
  j["rho"] = c.solver.rho;
  j["lambda"] = c.solver.lambda;
  j["max_iters"] = c.solver.max_iters;
  j["tol"] = c.solver.tol;
  j["pca_dim"] = c.pca_dim;
  j["per_class"] = c.split.per_class;
  j["seed"] = c.split.seed;
  j["trials"] = c.split.trials;
  j["cv_folds"] = c.cv_folds;
  j["rho_grid"] = c.rho_grid;
  j["lambda_grid"] = c.lambda_grid;
  j["per_trial_cv"] = c.per_trial_cv;
  j["timing"] = c.timing;
  j["provenance"] = r.provenance;
  return j;
}

}  // namespace

void emit_report(const ExperimentReport& report, const std::string& path, ReportFormat format) {
  std::ofstream os(path, std::ios::binary);  // byte-stable, no newline translation
  if (!os) throw IoError("cannot open '" + path + "' for writing");

  if (format == ReportFormat::JsonLines) {
    os << config_record(report).dump() << '\n';
    for (const auto& t : report.trials) {
      ordered_json j;
      j["record"] = "trial";
      j["index"] = t.index;
      j["accuracy"] = t.accuracy;
      j["chosen_rho"] = t.chosen_rho;
      j["chosen_lambda"] = t.chosen_lambda;
      if (report.has_timing) {
        j["time_mean_s"] = t.time_mean_s;
        j["time_median_s"] = t.time_median_s;
      }
      os << j.dump() << '\n';
    }
    ordered_json s;
    s["record"] = "summary";
    s["trials"] = report.trials.size();
    s["mean_accuracy"] = report.mean_accuracy;
    s["stddev_accuracy"] = report.stddev_accuracy;
    os << s.dump() << '\n';
  } else {
    os << "trial,accuracy,chosen_rho,chosen_lambda";
    if (report.has_timing) os << ",time_mean_s,time_median_s";
    os << '\n';
    for (const auto& t : report.trials) {
      os << t.index << ',' << format_double(t.accuracy) << ',' << format_double(t.chosen_rho)
         << ',' << format_double(t.chosen_lambda);
      if (report.has_timing)
        os << ',' << format_double(t.time_mean_s) << ',' << format_double(t.time_median_s);
      os << '\n';
    }
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

ExperimentReport parse_report(const std::string& path, ReportFormat format) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");

  ExperimentReport report;
  if (format == ReportFormat::JsonLines) {
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      ordered_json j;
      try {
        j = ordered_json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw IoError("'" + path + "': " + e.what());
      }
      const std::string record = j.value("record", "");
      if (record == "config") {
        report.dataset_name = j.value("dataset", "");
        report.config.manifest_path = j.value("manifest", "");
        report.config.coder = coder_from_name(j.value("coder", "nnls"));
        report.config.solver.rho = j.value("rho", 1.0);
        report.config.solver.lambda = j.value("lambda", 0.0);
        report.config.solver.max_iters = j.value("max_iters", std::size_t{5});
        report.config.solver.tol = j.value("tol", 1e-6);
        report.config.pca_dim = j.value("pca_dim", std::size_t{0});
        report.config.split.per_class = j.value("per_class", std::size_t{1});
        report.config.split.seed = j.value("seed", std::uint64_t{0});
        report.config.split.trials = j.value("trials", std::size_t{1});
        report.config.cv_folds = j.value("cv_folds", std::size_t{5});
        report.config.rho_grid = j.value("rho_grid", std::vector<double>{});
        report.config.lambda_grid = j.value("lambda_grid", std::vector<double>{});
        report.config.per_trial_cv = j.value("per_trial_cv", false);
        report.config.timing = j.value("timing", false);
        report.provenance = j.value("provenance", std::vector<std::string>{});
        report.has_timing = report.config.timing;
      } else if (record == "trial") {
        TrialResult t;
        t.index = j.value("index", std::size_t{0});
        t.accuracy = j.value("accuracy", 0.0);
        t.chosen_rho = j.value("chosen_rho", 0.0);
        t.chosen_lambda = j.value("chosen_lambda", 0.0);
        if (j.contains("time_mean_s")) {
          t.time_mean_s = j["time_mean_s"].get<double>();
          t.time_median_s = j.value("time_median_s", 0.0);
          report.has_timing = true;
        }
        report.trials.push_back(t);
      } else if (record == "summary") {
        report.mean_accuracy = j.value("mean_accuracy", 0.0);
        report.stddev_accuracy = j.value("stddev_accuracy", 0.0);
      } else {
        throw IoError("'" + path + "': unknown record type '" + record + "'");
      }
    }
    return report;
  }

  std::string header;
  if (!std::getline(is, header)) throw IoError("'" + path + "': empty csv report");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const bool timing = header.find("time_mean_s") != std::string::npos;
  report.has_timing = timing;

  std::string line;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> fields;
    while (std::getline(ss, tok, ',')) fields.push_back(tok);
    const std::size_t expected = timing ? 6 : 4;
    if (fields.size() != expected)
      throw RaggedRow("'" + path + "' line " + std::to_string(lineno) + ": expected " +
                      std::to_string(expected) + " fields");
    TrialResult t;
    t.index = std::stoul(fields[0]);
    t.accuracy = std::stod(fields[1]);
    t.chosen_rho = std::stod(fields[2]);
    t.chosen_lambda = std::stod(fields[3]);
    if (timing) {
      t.time_mean_s = std::stod(fields[4]);
      t.time_median_s = std::stod(fields[5]);
    }
    report.trials.push_back(t);
  }
  finalize_stats(report);
  return report;
}

std::string format_summary(const ExperimentReport& report) {
  std::ostringstream os;
  os << "dataset:  " << report.dataset_name << '\n';
  os << "coder:    " << coder_name(report.config.coder) << '\n';
  os << "trials:   " << report.trials.size() << '\n';
  os << "accuracy: mean " << format_double(report.mean_accuracy) << ", stddev "
     << format_double(report.stddev_accuracy) << '\n';
  for (const auto& t : report.trials) {
    os << "  trial " << t.index << ": accuracy " << format_double(t.accuracy);
    if (report.config.coder == CoderKind::Nnls)
      os << ", rho " << format_double(t.chosen_rho);
    else
      os << ", lambda " << format_double(t.chosen_lambda);
    if (report.has_timing)
      os << ", per-query mean " << format_double(t.time_mean_s) << " s";
    os << '\n';
  }
  return os.str();
}

}  // namespace nrc
