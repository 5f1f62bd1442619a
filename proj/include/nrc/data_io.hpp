#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nrc/classifier.hpp"
#include "nrc/linalg.hpp"

namespace nrc {

struct RawDataset {
  DenseMatrix features;     // D x N
  std::vector<int> labels;  // length N, original values
  std::string source;       // provenance
};

enum class IdxKind { Images, Labels };

struct IdxData {
  IdxKind kind = IdxKind::Images;
  DenseMatrix images;       // (rows*cols) x N, pixels scaled to [0,1]
  std::vector<int> labels;
};

/// Reads one IDX file (plain or gzip, sniffed by magic bytes). Supports the
/// uint8 3-D image tensor (magic 0x00000803) and 1-D label vector (0x00000801)
/// layouts; big-endian header, one column per sample.
IdxData read_idx(const std::string& path);

/// Image + label file pair combined into one dataset.
RawDataset read_idx_pair(const std::string& images_path, const std::string& labels_path);

struct DelimitedSchema {
  std::size_t label_column = 0;  // position of the label field in each row
  char delimiter = ' ';          // ' ' means any run of spaces/tabs
};

/// Whitespace- or character-delimited text, one sample per row. Labels must
/// be integral. An empty file yields N = 0.
RawDataset read_delimited(const std::string& path, const DelimitedSchema& schema = {});

struct SplitSpec {
  std::size_t per_class = 1;  // training samples drawn per class
  std::uint64_t seed = 0;
  std::size_t trials = 1;
};

/// Draws exactly per_class samples per class without replacement from the
/// SplitMix64 stream seeded by (seed, trial, class value); see rng.hpp for the
/// exact derivation. Train columns are grouped by class with ascending source
/// indices; the remainder preserves the input order. The two parts partition
/// the input.
std::pair<LabeledDataset, LabeledDataset> stratified_sample(const RawDataset& data,
                                                            const SplitSpec& spec,
                                                            std::size_t trial);

/// Key-value manifest naming the dataset files. `format` is "delimited"
/// (keys train/test, label_column, delimiter) or "idx" (keys train_images,
/// train_labels, test_images, test_labels). Paths are resolved relative to
/// the manifest location.
struct DatasetManifest {
  std::string name;
  std::string format;
  std::string train, test;                       // delimited
  std::string train_images, train_labels;        // idx
  std::string test_images, test_labels;
  std::size_t label_column = 0;
  char delimiter = ' ';
  std::size_t classes = 0;                       // declared class count, 0 = derive
  std::string base_dir;

  static DatasetManifest load(const std::string& path);
};

/// Loads one split ("train" or "test"). Throws IoError when the split is not
/// declared, EmptyClass when fewer classes than declared are present.
RawDataset load_split(const DatasetManifest& manifest, const std::string& split);
bool has_split(const DatasetManifest& manifest, const std::string& split);

namespace detail {
// `key = value` lines, '#' comments, used by manifests and experiment configs
std::map<std::string, std::string> read_key_values(const std::string& path);
}  // namespace detail

}  // namespace nrc
