#include "nrc/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <string>
#include <thread>

#include "nrc/binio.hpp"

namespace nrc {

LabeledDataset LabeledDataset::from_raw(DenseMatrix features, const std::vector<int>& raw_labels) {
  if (raw_labels.size() != features.cols())
    throw DimensionMismatch("dataset: label count != column count");

  LabeledDataset ds;
  ds.features = std::move(features);

  std::map<int, int> canon;  // original value -> canonical index, ascending values
  for (int v : raw_labels) canon.emplace(v, 0);
  int next = 0;
  for (auto& [value, idx] : canon) {
    idx = next++;
    ds.class_values.push_back(value);
  }

  ds.labels.reserve(raw_labels.size());
  ds.class_index.resize(canon.size());
  for (std::size_t j = 0; j < raw_labels.size(); ++j) {
    const int k = canon[raw_labels[j]];
    ds.labels.push_back(k);
    ds.class_index[static_cast<std::size_t>(k)].push_back(j);
  }
  return ds;
}

namespace {

DictionaryFactorization build_for_coder(const DenseMatrix& dict, CoderKind coder,
                                        const SolverConfig& cfg) {
  if (coder == CoderKind::Ridge) return DictionaryFactorization::build(dict, cfg.lambda);
  return build_factorization(dict, cfg.rho);
}

}  // namespace

FittedClassifier fit(const LabeledDataset& data, CoderKind coder, const SolverConfig& cfg) {
  validate(cfg);
  if (coder == CoderKind::Lasso && !(cfg.lambda > 0.0))
    throw InvalidConfig("lasso coder: lambda must be > 0");
  if (data.features.empty()) throw DimensionMismatch("fit: empty dataset");
  if (data.classes() == 0) throw EmptyClass("fit: dataset has no classes");
  for (std::size_t k = 0; k < data.class_index.size(); ++k)
    if (data.class_index[k].empty())
      throw EmptyClass("fit: class index " + std::to_string(k) + " has no samples");

  FittedClassifier clf;
  clf.dictionary = l2_normalize_columns(data.features);
  clf.labels = data.labels;
  clf.class_values = data.class_values;
  clf.class_index = data.class_index;
  clf.coder = coder;
  clf.config = cfg;
  clf.factorization = build_for_coder(clf.dictionary, coder, cfg);
  return clf;
}

CodingResult code(const FittedClassifier& clf, const Vector& y) {
  if (y.size() != clf.dim()) throw DimensionMismatch("code: len(y) != dictionary rows");
  if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; })) {
    CodingResult res;
    res.coefficients.assign(clf.count(), 0.0);
    res.converged = true;
    return res;
  }
  const Vector xty = matvec(clf.dictionary, y, /*transposed=*/true);
  switch (clf.coder) {
    case CoderKind::Nnls:
      return nnls_admm(clf.factorization, xty, clf.config);
    case CoderKind::Lasso:
      return lasso_admm(clf.factorization, xty, clf.config);
    case CoderKind::Ridge: {
      CodingResult res;
      res.coefficients = clf.factorization.apply(xty);
      res.converged = true;
      return res;
    }
  }
  throw InvalidConfig("code: unknown coder");
}

Vector class_residuals(const FittedClassifier& clf, const Vector& y, const Vector& c) {
  if (y.size() != clf.dim()) throw DimensionMismatch("class_residuals: len(y) != rows");
  if (c.size() != clf.count()) throw DimensionMismatch("class_residuals: len(c) != columns");

  Vector residuals(clf.classes());
  Vector tmp(y.size());
  for (std::size_t k = 0; k < clf.class_index.size(); ++k) {
    std::copy(y.begin(), y.end(), tmp.begin());
    for (std::size_t j : clf.class_index[k])
      if (c[j] != 0.0) axpy(-c[j], clf.dictionary.col(j), tmp);
    residuals[k] = norm2(tmp);
  }
  return residuals;
}

Prediction predict(const FittedClassifier& clf, const Vector& y) {
  if (y.size() != clf.dim()) throw DimensionMismatch("predict: len(y) != dictionary rows");
  const double n = norm2(y);
  if (n < 1e-12) throw ZeroNormQuery("predict: query has (near-)zero norm");

  Vector yn(y.size());
  const double inv = 1.0 / n;
  for (std::size_t i = 0; i < y.size(); ++i) yn[i] = y[i] * inv;

  CodingResult coded = code(clf, yn);
  Prediction pred;
  pred.residuals = class_residuals(clf, yn, coded.coefficients);
  pred.coefficients = std::move(coded.coefficients);

  std::size_t arg = 0;
  for (std::size_t k = 1; k < pred.residuals.size(); ++k)
    if (pred.residuals[k] < pred.residuals[arg]) arg = k;  // ties keep the lower index
  pred.label = static_cast<int>(arg);
  return pred;
}

std::vector<Prediction> predict_batch(const FittedClassifier& clf, const DenseMatrix& queries,
                                      unsigned threads) {
  if (queries.cols() == 0) return {};
  if (queries.rows() != clf.dim())
    throw DimensionMismatch("predict_batch: query rows != dictionary rows");

  const std::size_t m = queries.cols();
  std::vector<Prediction> out(m);

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, m));

  auto work = [&](std::size_t begin, std::size_t end, std::exception_ptr& err) {
    try {
      for (std::size_t j = begin; j < end; ++j) {
        const auto q = queries.col(j);
        out[j] = predict(clf, Vector(q.begin(), q.end()));
      }
    } catch (...) {
      err = std::current_exception();
    }
  };

  if (threads <= 1) {
    std::exception_ptr err;
    work(0, m, err);
    if (err) std::rethrow_exception(err);
    return out;
  }

  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(threads);
  const std::size_t chunk = (m + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t b = t * chunk;
    const std::size_t e = std::min(m, b + chunk);
    if (b >= e) break;
    pool.emplace_back(work, b, e, std::ref(errs[t]));
  }
  for (auto& th : pool) th.join();
  for (auto& err : errs)
    if (err) std::rethrow_exception(err);
  return out;
}

namespace {

constexpr char kModelMagic[4] = {'N', 'R', 'C', 'M'};
constexpr std::uint32_t kModelVersion = 1;

std::uint32_t coder_tag(CoderKind k) {
  switch (k) {
    case CoderKind::Nnls: return 0;
    case CoderKind::Ridge: return 1;
    case CoderKind::Lasso: return 2;
  }
  return 0;
}

CoderKind coder_from_tag(std::uint32_t t) {
  switch (t) {
    case 0: return CoderKind::Nnls;
    case 1: return CoderKind::Ridge;
    case 2: return CoderKind::Lasso;
  }
  throw IoError("model file: unknown coder tag");
}

}  // namespace

void save_model(const std::string& path, const FittedClassifier& clf, const PcaModel* pca) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");

  os.write(kModelMagic, 4);
  detail::write_u32(os, kModelVersion);
  os.put(pca ? 1 : 0);
  if (pca) detail::write_pca_block(os, *pca);

  detail::write_u32(os, coder_tag(clf.coder));
  detail::write_f64(os, clf.config.rho);
  detail::write_u32(os, static_cast<std::uint32_t>(clf.config.max_iters));
  detail::write_f64(os, clf.config.tol);
  detail::write_f64(os, clf.config.lambda);

  detail::write_u32(os, static_cast<std::uint32_t>(clf.dim()));
  detail::write_u32(os, static_cast<std::uint32_t>(clf.count()));
  detail::write_u32(os, static_cast<std::uint32_t>(clf.classes()));
  for (int v : clf.class_values) detail::write_i32(os, v);
  for (int l : clf.labels) detail::write_u32(os, static_cast<std::uint32_t>(l));
  detail::write_f64s(os, clf.dictionary.data());

  if (!os) throw IoError("write failed for '" + path + "'");
}

LoadedModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");

  char magic[4];
  if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kModelMagic))
    throw IoError("'" + path + "' is not a model file");
  if (detail::read_u32(is) != kModelVersion) throw IoError("unsupported model version");

  LoadedModel loaded;
  const int has_pca = is.get();
  if (has_pca < 0) throw IoError("model file: unexpected end");
  if (has_pca) loaded.pca = detail::read_pca_block(is);

  FittedClassifier& clf = loaded.classifier;
  clf.coder = coder_from_tag(detail::read_u32(is));
  clf.config.rho = detail::read_f64(is);
  clf.config.max_iters = detail::read_u32(is);
  clf.config.tol = detail::read_f64(is);
  clf.config.lambda = detail::read_f64(is);

  const std::uint32_t dim = detail::read_u32(is);
  const std::uint32_t n = detail::read_u32(is);
  const std::uint32_t k = detail::read_u32(is);
  clf.class_values.resize(k);
  for (auto& v : clf.class_values) v = detail::read_i32(is);
  clf.labels.resize(n);
  clf.class_index.assign(k, {});
  for (std::size_t j = 0; j < n; ++j) {
    const std::uint32_t l = detail::read_u32(is);
    if (l >= k) throw IoError("model file: label out of range");
    clf.labels[j] = static_cast<int>(l);
    clf.class_index[l].push_back(j);
  }
  clf.dictionary = DenseMatrix(dim, n);
  detail::read_f64s(is, clf.dictionary.data());
  if (!is) throw IoError("model file: unexpected end");

  // the factorization is derived data; rebuild it for the stored config
  clf.factorization = build_for_coder(clf.dictionary, clf.coder, clf.config);
  return loaded;
}

}  // namespace nrc
