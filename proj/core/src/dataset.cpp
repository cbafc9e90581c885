#include "grcan/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "grcan/errors.hpp"
#include "grcan/rng.hpp"

namespace grcan {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

bool is_missing(const std::string& s) { return s.empty() || s == "?"; }

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

std::size_t resolve_column(const ColumnRef& ref, const std::vector<std::string>& header,
                           std::size_t n_cols, const std::string& path) {
  if (std::holds_alternative<std::size_t>(ref)) {
    const std::size_t idx = std::get<std::size_t>(ref);
    if (idx >= n_cols) {
      throw ConfigError(path + ": column index " + std::to_string(idx) + " out of range (" +
                        std::to_string(n_cols) + " columns)");
    }
    return idx;
  }
  const std::string& name = std::get<std::string>(ref);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ConfigError(path + ": no column named '" + name + "'");
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  // Leading/trailing blank lines are tolerated; interior blanks are rows.
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw DataError(path + ": empty file");

  const auto first = split_line(lines[0]);
  const std::size_t n_cols = first.size();
  if (n_cols < 2) throw LoadError(path + ":1: expected at least two columns");

  // A label column given by name implies a header; otherwise detect one by
  // looking for non-numeric entries outside the label column.
  std::size_t label_guess = n_cols - 1;
  if (schema.label_col && std::holds_alternative<std::size_t>(*schema.label_col)) {
    label_guess = std::get<std::size_t>(*schema.label_col);
  }
  bool has_header;
  if (schema.has_header) {
    has_header = *schema.has_header;
  } else if (schema.label_col && std::holds_alternative<std::string>(*schema.label_col)) {
    has_header = true;
  } else {
    has_header = false;
    for (std::size_t c = 0; c < n_cols && !has_header; ++c) {
      double unused;
      if (c != label_guess && !is_missing(first[c]) && !parse_number(first[c], unused)) {
        has_header = true;
      }
    }
  }

  const std::vector<std::string> header = has_header ? first : std::vector<std::string>{};
  const std::size_t label_col = schema.label_col
                                    ? resolve_column(*schema.label_col, header, n_cols, path)
                                    : n_cols - 1;
  std::vector<bool> ignored(n_cols, false);
  for (const ColumnRef& ref : schema.ignore_cols) {
    ignored[resolve_column(ref, header, n_cols, path)] = true;
  }
  if (ignored[label_col]) throw ConfigError(path + ": label column is in ignore_cols");

  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < n_cols; ++c) {
    if (c != label_col && !ignored[c]) feature_cols.push_back(c);
  }
  if (feature_cols.empty()) throw ConfigError(path + ": no feature columns left");

  Dataset ds;
  ds.source = path;
  {
    auto slash = path.find_last_of('/');
    ds.name = slash == std::string::npos ? path : path.substr(slash + 1);
  }
  std::unordered_map<std::string, int> label_ids;
  std::vector<double> values;
  values.reserve((lines.size() - (has_header ? 1 : 0)) * feature_cols.size());

  for (std::size_t li = has_header ? 1 : 0; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    if (trim(lines[li]).empty()) continue;
    const auto cells = split_line(lines[li]);
    if (cells.size() != n_cols) {
      throw LoadError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(n_cols) + " fields, got " + std::to_string(cells.size()));
    }
    bool missing = is_missing(cells[label_col]);
    for (std::size_t c : feature_cols) missing = missing || is_missing(cells[c]);
    if (missing) continue;  // discard the whole row

    std::vector<double> row(feature_cols.size());
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      if (!parse_number(cells[feature_cols[f]], row[f])) {
        throw LoadError(path + ":" + std::to_string(line_no) + ": cannot parse '" +
                        cells[feature_cols[f]] + "' as a number");
      }
    }
    const std::string& label = cells[label_col];
    auto it = label_ids.find(label);
    if (it == label_ids.end()) {
      it = label_ids.emplace(label, static_cast<int>(ds.class_names.size())).first;
      ds.class_names.push_back(label);
    }
    ds.labels.push_back(it->second);
    values.insert(values.end(), row.begin(), row.end());
  }

  if (ds.labels.empty()) throw DataError(path + ": no usable rows after dropping missing values");
  ds.n_class = ds.class_names.size();
  if (ds.n_class < 2) throw DataError(path + ": needs at least two classes");
  ds.feature_shape = {feature_cols.size()};
  ds.features = Tensor({ds.labels.size(), feature_cols.size()}, std::move(values));
  ds.onehot = one_hot(ds.labels, ds.n_class);
  return ds;
}

namespace {

std::vector<unsigned char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

std::vector<unsigned char> gunzip(const std::vector<unsigned char>& in, const std::string& path) {
  std::vector<unsigned char> out;
  out.reserve(in.size() * 4);
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK) throw IoError(path + ": zlib init failed");
  zs.next_in = const_cast<unsigned char*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  unsigned char buf[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buf;
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw FormatError(path + ": corrupt gzip stream");
    }
    out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
  }
  inflateEnd(&zs);
  return out;
}

std::vector<unsigned char> read_maybe_gz(const std::string& path) {
  auto bytes = read_file_bytes(path);
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) return gunzip(bytes, path);
  return bytes;
}

std::uint32_t read_be32(const unsigned char* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxContent {
  std::vector<std::size_t> dims;
  std::vector<unsigned char> payload;
};

IdxContent parse_idx(const std::string& path, std::uint32_t expect_magic) {
  const auto bytes = read_maybe_gz(path);
  if (bytes.size() < 4) throw LengthError(path + ": too short for an IDX header");
  const std::uint32_t magic = read_be32(bytes.data());
  if (magic != expect_magic) {
    char found[16], want[16];
    std::snprintf(found, sizeof(found), "0x%08x", magic);
    std::snprintf(want, sizeof(want), "0x%08x", expect_magic);
    throw FormatError(path + ": magic " + found + ", expected " + want);
  }
  const std::size_t n_dims = magic & 0xff;
  if (bytes.size() < 4 + 4 * n_dims) throw LengthError(path + ": truncated dimension header");
  IdxContent c;
  std::size_t total = 1;
  for (std::size_t d = 0; d < n_dims; ++d) {
    const std::size_t e = read_be32(bytes.data() + 4 + 4 * d);
    c.dims.push_back(e);
    total *= e;
  }
  const std::size_t offset = 4 + 4 * n_dims;
  if (bytes.size() - offset != total) {
    throw LengthError(path + ": payload has " + std::to_string(bytes.size() - offset) +
                      " bytes, header declares " + std::to_string(total));
  }
  c.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  return c;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  IdxContent images = parse_idx(images_path, kIdxImagesMagic);
  IdxContent labels = parse_idx(labels_path, kIdxLabelsMagic);
  if (images.dims[0] != labels.dims[0]) {
    throw DataError("IDX pair mismatch: " + std::to_string(images.dims[0]) + " images vs " +
                    std::to_string(labels.dims[0]) + " labels");
  }
  const std::size_t n = images.dims[0], h = images.dims[1], w = images.dims[2];

  Dataset ds;
  ds.source = images_path;
  ds.name = "idx";
  ds.feature_shape = {h, w};
  ds.features = Tensor({n, h, w});
  for (std::size_t i = 0; i < images.payload.size(); ++i) {
    ds.features[i] = static_cast<double>(images.payload[i]);
  }
  ds.labels.resize(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = static_cast<int>(labels.payload[i]);
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.n_class = static_cast<std::size_t>(max_label) + 1;
  for (std::size_t c = 0; c < ds.n_class; ++c) ds.class_names.push_back(std::to_string(c));
  ds.onehot = one_hot(ds.labels, ds.n_class);
  return ds;
}

void write_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path) {
  if (ds.feature_shape.size() != 2) {
    throw DataError("write_idx requires image-shaped features");
  }
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw IoError("cannot write " + images_path);
  write_be32(img, kIdxImagesMagic);
  write_be32(img, static_cast<std::uint32_t>(ds.size()));
  write_be32(img, static_cast<std::uint32_t>(ds.feature_shape[0]));
  write_be32(img, static_cast<std::uint32_t>(ds.feature_shape[1]));
  for (std::size_t i = 0; i < ds.features.size(); ++i) {
    const double v = ds.features[i];
    const unsigned char b = static_cast<unsigned char>(std::lround(v));
    img.write(reinterpret_cast<const char*>(&b), 1);
  }

  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw IoError("cannot write " + labels_path);
  write_be32(lab, kIdxLabelsMagic);
  write_be32(lab, static_cast<std::uint32_t>(ds.size()));
  for (int l : ds.labels) {
    const unsigned char b = static_cast<unsigned char>(l);
    lab.write(reinterpret_cast<const char*>(&b), 1);
  }
}

Scaler Scaler::fit(const Dataset& ds, std::span<const std::size_t> train_indices) {
  if (train_indices.empty()) throw ConfigError("Scaler::fit needs at least one training row");
  const std::size_t d = ds.feature_width();
  Scaler s;
  s.mins.assign(d, std::numeric_limits<double>::infinity());
  s.maxs.assign(d, -std::numeric_limits<double>::infinity());
  for (std::size_t idx : train_indices) {
    const double* row = ds.features.data() + idx * d;
    for (std::size_t f = 0; f < d; ++f) {
      s.mins[f] = std::min(s.mins[f], row[f]);
      s.maxs[f] = std::max(s.maxs[f], row[f]);
    }
  }
  return s;
}

void Scaler::apply(Dataset& ds) const { apply_rows(ds.features); }

void Scaler::apply_rows(Tensor& rows) const {
  const std::size_t d = mins.size();
  if (rows.size() % d != 0) {
    throw DimensionError("scaler fitted for width " + std::to_string(d) +
                         ", rows have total size " + std::to_string(rows.size()));
  }
  const std::size_t n = rows.size() / d;
  for (std::size_t i = 0; i < n; ++i) {
    double* row = rows.data() + i * d;
    for (std::size_t f = 0; f < d; ++f) {
      const double range = maxs[f] - mins[f];
      row[f] = range > 0.0 ? (row[f] - mins[f]) / range : 0.0;
    }
  }
}

SplitIndices split_80_20(const Dataset& ds, std::uint64_t seed) {
  const std::size_t n = ds.size();
  if (n < 5) throw ConfigError("80/20 split needs at least 5 samples, got " + std::to_string(n));
  const std::size_t n_train =
      static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(n) + 0.5));
  return split_counts(ds, n_train, n - n_train, seed);
}

SplitIndices split_counts(const Dataset& ds, std::size_t n_train, std::size_t n_test,
                          std::uint64_t seed) {
  const std::size_t n = ds.size();
  if (n_train == 0 || n_test == 0 || n_train + n_test > n) {
    throw ConfigError("split " + std::to_string(n_train) + "/" + std::to_string(n_test) +
                      " invalid for " + std::to_string(n) + " samples");
  }
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed);
  rng.shuffle(perm);
  SplitIndices s;
  s.seed = seed;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_test));
  return s;
}

std::vector<std::size_t> sample_indices(std::span<const std::size_t> pool, std::size_t n,
                                        std::uint64_t seed) {
  if (n > pool.size()) {
    throw ConfigError("cannot sample " + std::to_string(n) + " from a pool of " +
                      std::to_string(pool.size()));
  }
  std::vector<std::size_t> copy(pool.begin(), pool.end());
  Rng rng(seed);
  rng.shuffle(copy);
  copy.resize(n);
  return copy;
}

Tensor one_hot(const std::vector<int>& labels, std::size_t n_class) {
  Tensor out({labels.size(), n_class});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= n_class) {
      throw DataError("label " + std::to_string(labels[i]) + " outside 0.." +
                      std::to_string(n_class - 1));
    }
    out[i * n_class + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  return out;
}

}  // namespace grcan
