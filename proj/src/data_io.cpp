#include "nrc/data_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "nrc/rng.hpp"

namespace nrc {

namespace {

// gzread handles both gzip and plain files; the header is sniffed by zlib.
std::vector<unsigned char> read_file_maybe_gzip(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open '" + path + "'");
  std::vector<unsigned char> buf;
  unsigned char chunk[1 << 16];
  int got;
  while ((got = gzread(f, chunk, sizeof(chunk))) > 0) buf.insert(buf.end(), chunk, chunk + got);
  const bool bad = got < 0;
  gzclose(f);
  if (bad) throw IoError("read failed for '" + path + "'");
  return buf;
}

std::uint32_t be32(const unsigned char* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

}  // namespace

IdxData read_idx(const std::string& path) {
  const auto buf = read_file_maybe_gzip(path);
  if (buf.size() < 4) throw TruncatedFile("'" + path + "': shorter than the magic");

  if (buf[0] != 0 || buf[1] != 0)
    throw BadMagic("'" + path + "': bad idx magic");
  const unsigned dtype = buf[2];
  const unsigned ndims = buf[3];
  if (ndims != 1 && ndims != 3)
    throw BadMagic("'" + path + "': unsupported idx dimension count " + std::to_string(ndims));
  if (dtype != 0x08)
    throw UnsupportedElementType("'" + path + "': idx element type " + std::to_string(dtype) +
                                 " (only uint8 is supported)");

  const std::size_t header = 4 + 4 * ndims;
  if (buf.size() < header) throw TruncatedFile("'" + path + "': truncated idx header");

  IdxData out;
  if (ndims == 1) {
    const std::size_t n = be32(&buf[4]);
    if (buf.size() < header + n) throw TruncatedFile("'" + path + "': truncated label payload");
    out.kind = IdxKind::Labels;
    out.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.labels.push_back(buf[header + i]);
    return out;
  }

  const std::size_t n = be32(&buf[4]);
  const std::size_t rows = be32(&buf[8]);
  const std::size_t cols = be32(&buf[12]);
  const std::size_t pixels = rows * cols;
  if (buf.size() < header + n * pixels)
    throw TruncatedFile("'" + path + "': truncated image payload");

  out.kind = IdxKind::Images;
  out.images = DenseMatrix(pixels, n);
  for (std::size_t j = 0; j < n; ++j) {
    auto dst = out.images.col(j);
    const unsigned char* src = &buf[header + j * pixels];
    for (std::size_t p = 0; p < pixels; ++p) dst[p] = src[p] / 255.0;
  }
  return out;
}

RawDataset read_idx_pair(const std::string& images_path, const std::string& labels_path) {
  IdxData images = read_idx(images_path);
  IdxData labels = read_idx(labels_path);
  if (images.kind != IdxKind::Images)
    throw BadMagic("'" + images_path + "': expected an image tensor");
  if (labels.kind != IdxKind::Labels)
    throw BadMagic("'" + labels_path + "': expected a label vector");
  if (images.images.cols() != labels.labels.size())
    throw DimensionMismatch("idx pair: image count != label count");

  RawDataset ds;
  ds.features = std::move(images.images);
  ds.labels = std::move(labels.labels);
  ds.source = images_path + " + " + labels_path;
  return ds;
}

namespace {

std::vector<std::string> split_fields(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  if (delimiter == ' ') {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) fields.push_back(tok);
    return fields;
  }
  std::string cur;
  for (char ch : line) {
    if (ch == delimiter) {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_number(const std::string& tok, std::size_t row, std::size_t col) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v))
    throw NonNumericField("row " + std::to_string(row + 1) + ", field " +
                          std::to_string(col + 1) + ": '" + tok + "' is not a number");
  return v;
}

}  // namespace

RawDataset read_delimited(const std::string& path, const DelimitedSchema& schema) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");

  RawDataset ds;
  ds.source = path;

  std::vector<double> flat;  // one parsed sample after another = column-major
  std::size_t fields_per_row = 0;
  std::size_t row = 0;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      ++row;
      continue;  // blank line
    }
    const auto fields = split_fields(line, schema.delimiter);
    if (fields_per_row == 0) {
      fields_per_row = fields.size();
      if (fields_per_row < 2)
        throw InvalidConfig("'" + path + "': rows need a label and at least one feature");
      if (schema.label_column >= fields_per_row)
        throw InvalidConfig("'" + path + "': label column out of range");
    } else if (fields.size() != fields_per_row) {
      throw RaggedRow("'" + path + "' row " + std::to_string(row + 1) + ": expected " +
                      std::to_string(fields_per_row) + " fields, got " +
                      std::to_string(fields.size()));
    }

    for (std::size_t c = 0; c < fields.size(); ++c) {
      const double v = parse_number(fields[c], row, c);
      if (c == schema.label_column) {
        const double r = std::round(v);
        if (std::abs(v - r) > 1e-9)
          throw NonNumericField("row " + std::to_string(row + 1) +
                                ": label must be an integer, got '" + fields[c] + "'");
        ds.labels.push_back(static_cast<int>(r));
      } else {
        flat.push_back(v);
      }
    }
    ++row;
  }

  const std::size_t n = ds.labels.size();
  if (n == 0) return ds;  // empty dataset, N = 0
  const std::size_t dim = fields_per_row - 1;
  ds.features = DenseMatrix(dim, n);
  std::copy(flat.begin(), flat.end(), ds.features.data().begin());
  return ds;
}

std::pair<LabeledDataset, LabeledDataset> stratified_sample(const RawDataset& data,
                                                            const SplitSpec& spec,
                                                            std::size_t trial) {
  if (spec.per_class < 1) throw InvalidConfig("split: per_class must be >= 1");
  if (data.labels.size() != data.features.cols())
    throw DimensionMismatch("split: label count != column count");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t j = 0; j < data.labels.size(); ++j) by_class[data.labels[j]].push_back(j);

  for (const auto& [value, idx] : by_class)
    if (idx.size() < spec.per_class)
      throw ClassTooSmall("class " + std::to_string(value) + " has " +
                          std::to_string(idx.size()) + " samples, need " +
                          std::to_string(spec.per_class));

  std::vector<std::size_t> train_cols;
  std::vector<char> in_train(data.labels.size(), 0);
  for (const auto& [value, idx] : by_class) {
    std::vector<std::size_t> pool = idx;
    SplitMix64 rng(stream_seed(spec.seed, trial, value));
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.bounded(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(spec.per_class));
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      train_cols.push_back(pool[i]);
      in_train[pool[i]] = 1;
    }
  }

  std::vector<std::size_t> rest_cols;
  for (std::size_t j = 0; j < data.labels.size(); ++j)
    if (!in_train[j]) rest_cols.push_back(j);

  auto take = [&](const std::vector<std::size_t>& cols) {
    DenseMatrix f(data.features.rows(), cols.size());
    std::vector<int> labels;
    labels.reserve(cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto src = data.features.col(cols[k]);
      std::copy(src.begin(), src.end(), f.col(k).begin());
      labels.push_back(data.labels[cols[k]]);
    }
    return LabeledDataset::from_raw(std::move(f), labels);
  };

  return {take(train_cols), take(rest_cols)};
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

char delimiter_from_name(const std::string& name) {
  if (name == "whitespace" || name.empty()) return ' ';
  if (name == "comma") return ',';
  if (name == "tab") return '\t';
  if (name.size() == 1) return name[0];
  throw InvalidConfig("manifest: unknown delimiter '" + name + "'");
}

}  // namespace

// shared with bench config loading
namespace detail {

std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InvalidConfig("'" + path + "' line " + std::to_string(lineno) +
                          ": expected key = value");
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

}  // namespace detail

DatasetManifest DatasetManifest::load(const std::string& path) {
  auto kv = detail::read_key_values(path);
  DatasetManifest m;
  m.base_dir = std::filesystem::path(path).parent_path().string();

  auto take = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) return std::string();
    const std::string v = it->second;
    kv.erase(it);
    return v;
  };

  m.name = take("name");
  m.format = take("format");
  m.train = take("train");
  m.test = take("test");
  m.train_images = take("train_images");
  m.train_labels = take("train_labels");
  m.test_images = take("test_images");
  m.test_labels = take("test_labels");
  m.delimiter = delimiter_from_name(take("delimiter"));
  if (const std::string v = take("label_column"); !v.empty())
    m.label_column = static_cast<std::size_t>(std::stoul(v));
  if (const std::string v = take("classes"); !v.empty())
    m.classes = static_cast<std::size_t>(std::stoul(v));

  if (!kv.empty()) throw InvalidConfig("manifest: unknown key '" + kv.begin()->first + "'");
  if (m.format != "delimited" && m.format != "idx")
    throw InvalidConfig("manifest: format must be 'delimited' or 'idx'");
  if (m.format == "delimited" && m.train.empty())
    throw InvalidConfig("manifest: delimited format needs a 'train' file");
  if (m.format == "idx" && (m.train_images.empty() || m.train_labels.empty()))
    throw InvalidConfig("manifest: idx format needs 'train_images' and 'train_labels'");
  return m;
}

bool has_split(const DatasetManifest& m, const std::string& split) {
  if (split == "train") return true;
  if (m.format == "delimited") return !m.test.empty();
  return !m.test_images.empty() && !m.test_labels.empty();
}

namespace {

std::string resolve(const std::string& base, const std::string& file) {
  std::filesystem::path p(file);
  if (p.is_absolute() || base.empty()) return file;
  return (std::filesystem::path(base) / p).string();
}

}  // namespace

RawDataset load_split(const DatasetManifest& m, const std::string& split) {
  if (split != "train" && split != "test")
    throw InvalidConfig("split must be 'train' or 'test'");
  if (!has_split(m, split)) throw IoError("manifest declares no '" + split + "' split");

  RawDataset ds;
  if (m.format == "delimited") {
    DelimitedSchema schema;
    schema.label_column = m.label_column;
    schema.delimiter = m.delimiter;
    ds = read_delimited(resolve(m.base_dir, split == "train" ? m.train : m.test), schema);
  } else {
    ds = split == "train"
             ? read_idx_pair(resolve(m.base_dir, m.train_images), resolve(m.base_dir, m.train_labels))
             : read_idx_pair(resolve(m.base_dir, m.test_images), resolve(m.base_dir, m.test_labels));
  }

  if (m.classes > 0) {
    std::map<int, std::size_t> seen;
    for (int l : ds.labels) ++seen[l];
    if (seen.size() != m.classes)
      throw EmptyClass("'" + split + "' split has " + std::to_string(seen.size()) +
                       " classes, manifest declares " + std::to_string(m.classes));
  }
  if (!m.name.empty()) ds.source = m.name + ": " + ds.source;
  return ds;
}

}  // namespace nrc
