#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nrc/preprocess.hpp"
#include "nrc/solvers.hpp"

namespace nrc {

/// Feature matrix with per-column class labels. Labels are canonicalized to
/// contiguous 0..K-1; class_values maps an index back to the original value.
struct LabeledDataset {
  DenseMatrix features;                              // D x N, columns are samples
  std::vector<int> labels;                           // canonical, length N
  std::vector<int> class_values;                     // index -> original label
  std::vector<std::vector<std::size_t>> class_index; // per-class column positions

  static LabeledDataset from_raw(DenseMatrix features, const std::vector<int>& raw_labels);

  std::size_t dim() const { return features.rows(); }
  std::size_t count() const { return features.cols(); }
  std::size_t classes() const { return class_values.size(); }
};

struct Prediction {
  int label;            // canonical class index, argmin residual, lowest index on ties
  Vector residuals;     // length K
  Vector coefficients;  // length N
};

/// Normalized dictionary plus the pre-stored solve operator for the chosen
/// coder. Immutable after fit; predict is a pure read.
struct FittedClassifier {
  DenseMatrix dictionary;  // columns have unit l2 norm
  std::vector<int> labels;
  std::vector<int> class_values;
  std::vector<std::vector<std::size_t>> class_index;
  CoderKind coder = CoderKind::Nnls;
  SolverConfig config;
  DictionaryFactorization factorization;

  std::size_t dim() const { return dictionary.rows(); }
  std::size_t count() const { return dictionary.cols(); }
  std::size_t classes() const { return class_values.size(); }
  int class_value(int label) const { return class_values[static_cast<std::size_t>(label)]; }
};

FittedClassifier fit(const LabeledDataset& data, CoderKind coder, const SolverConfig& cfg);

/// Codes y over the dictionary with the fitted coder. A zero query yields
/// zero coefficients.
CodingResult code(const FittedClassifier& clf, const Vector& y);

/// r_k = ||y - X_k c_k||_2 for every class k.
Vector class_residuals(const FittedClassifier& clf, const Vector& y, const Vector& c);

/// Normalizes y to unit l2 norm, codes it, and predicts the class with the
/// smallest residual. Throws ZeroNormQuery for y = 0.
Prediction predict(const FittedClassifier& clf, const Vector& y);

/// Column-wise predict. Equal to the sequential map in content and order;
/// queries may be processed concurrently. threads = 0 picks the hardware
/// concurrency, threads = 1 forces the sequential path.
std::vector<Prediction> predict_batch(const FittedClassifier& clf,
                                      const DenseMatrix& queries,
                                      unsigned threads = 0);

/// Versioned binary model container: optional PCA block plus the classifier
/// block (header, config, class table, dictionary). Little-endian throughout.
void save_model(const std::string& path, const FittedClassifier& clf,
                const PcaModel* pca = nullptr);

struct LoadedModel {
  std::optional<PcaModel> pca;
  FittedClassifier classifier;
};

LoadedModel load_model(const std::string& path);

}  // namespace nrc
