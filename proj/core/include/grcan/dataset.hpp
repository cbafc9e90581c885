#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "grcan/tensor.hpp"

namespace grcan {

// Immutable after loading. Features are [N, D] for vector data or
// [N, H, W] for images; labels are dense 0..K-1 with the original label
// strings kept for reporting.
struct Dataset {
  std::string name;
  std::string source;
  std::vector<std::size_t> feature_shape;  // {D} or {H, W}
  Tensor features;
  std::vector<int> labels;
  Tensor onehot;  // [N, K]
  std::size_t n_class = 0;
  std::vector<std::string> class_names;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_width() const { return shape_product(feature_shape); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * feature_width(), feature_width()};
  }
};

// Column reference: 0-based index or header name.
using ColumnRef = std::variant<std::size_t, std::string>;

struct CsvSchema {
  std::optional<ColumnRef> label_col;  // default: last column
  std::vector<ColumnRef> ignore_cols;
  std::optional<bool> has_header;  // default: detect from the first line
};

// Loads a comma-separated file. Rows with a missing field ('?' or empty)
// are dropped; labels are remapped to dense ids in first-appearance order.
Dataset load_csv(const std::string& path, const CsvSchema& schema = {});

// Parses big-endian IDX pairs (magic 0x803 for 3-d image files, 0x801 for
// 1-d label files). Gzipped files are detected and inflated transparently.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Serializes a dataset back to raw IDX bytes; loading then writing an
// (uncompressed) pair reproduces it byte for byte.
void write_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path);

// Per-feature affine rescale to [0, 1] with statistics taken from the
// training rows only; constant features map to 0.
struct Scaler {
  std::vector<double> mins;
  std::vector<double> maxs;

  static Scaler fit(const Dataset& ds, std::span<const std::size_t> train_indices);
  void apply(Dataset& ds) const;
  void apply_rows(Tensor& rows) const;
  bool empty() const { return mins.empty(); }
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

// Seeded shuffle then an 80/20 prefix/suffix split (train size rounds to
// the nearest integer). Requires at least 5 samples.
SplitIndices split_80_20(const Dataset& ds, std::uint64_t seed);

// Seeded shuffle then fixed-size split (used by predefined-count sets).
SplitIndices split_counts(const Dataset& ds, std::size_t n_train, std::size_t n_test,
                          std::uint64_t seed);

// Seeded sample of n indices out of pool, without replacement.
std::vector<std::size_t> sample_indices(std::span<const std::size_t> pool, std::size_t n,
                                        std::uint64_t seed);

// Row i has a single 1 at labels[i].
Tensor one_hot(const std::vector<int>& labels, std::size_t n_class);

}  // namespace grcan
