#pragma once

// Synthetic datasets and filesystem fixtures for tests.

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "grcan/dataset.hpp"
#include "grcan/rng.hpp"

namespace synth {

using grcan::Dataset;
using grcan::Tensor;

// Unique scratch directory, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("grcan_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

inline std::string write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
  return p.string();
}

// Two well-separated clusters in 2-d: class 0 near the origin, class 1
// near (1, 1). Linearly separable with a wide margin.
inline Dataset separable_toy(std::size_t n_per_class, std::uint64_t seed) {
  grcan::Rng rng(seed);
  Dataset ds;
  ds.name = "toy";
  ds.feature_shape = {2};
  ds.n_class = 2;
  ds.class_names = {"a", "b"};
  const std::size_t n = 2 * n_per_class;
  ds.features = Tensor({n, 2});
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int cls = i < n_per_class ? 0 : 1;
    const double base = cls == 0 ? 0.1 : 0.9;
    ds.features[i * 2 + 0] = base + rng.uniform_in(-0.08, 0.08);
    ds.features[i * 2 + 1] = base + rng.uniform_in(-0.08, 0.08);
    ds.labels[i] = cls;
  }
  ds.onehot = grcan::one_hot(ds.labels, 2);
  return ds;
}

// Exhaustive-angle check that a 2-d two-class set is linearly separable:
// projects onto many directions and looks for a clean interval split.
inline bool linearly_separable_2d(const Dataset& ds) {
  for (int a = 0; a < 360; ++a) {
    const double th = a * 3.14159265358979323846 / 180.0;
    const double wx = std::cos(th), wy = std::sin(th);
    double max0 = -1e300, min1 = 1e300;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const double proj = wx * ds.features[i * 2] + wy * ds.features[i * 2 + 1];
      if (ds.labels[i] == 0) {
        max0 = std::max(max0, proj);
      } else {
        min1 = std::min(min1, proj);
      }
    }
    if (max0 < min1) return true;
  }
  return false;
}

// Small grayscale pattern set: class 0 = horizontal band, class 1 =
// vertical band, class 2 = filled corner block; pixel noise on top.
// Intensities are integer 0..255 so the set round-trips through IDX.
inline Dataset pattern_images(std::size_t n_per_class, std::size_t side, std::uint64_t seed) {
  grcan::Rng rng(seed);
  Dataset ds;
  ds.name = "patterns";
  ds.feature_shape = {side, side};
  ds.n_class = 3;
  ds.class_names = {"0", "1", "2"};
  const std::size_t n = 3 * n_per_class;
  ds.features = Tensor({n, side, side});
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int cls = static_cast<int>(i / n_per_class);
    ds.labels[i] = cls;
    double* img = ds.features.data() + i * side * side;
    for (std::size_t p = 0; p < side * side; ++p) img[p] = rng.uniform_in(0.0, 40.0);
    const std::size_t band = 1 + rng.index(side - 2);
    if (cls == 0) {
      for (std::size_t c = 0; c < side; ++c) img[band * side + c] = 200 + rng.uniform_in(0, 55);
    } else if (cls == 1) {
      for (std::size_t r = 0; r < side; ++r) img[r * side + band] = 200 + rng.uniform_in(0, 55);
    } else {
      for (std::size_t r = 0; r < side / 2; ++r)
        for (std::size_t c = 0; c < side / 2; ++c) img[r * side + c] = 200 + rng.uniform_in(0, 55);
    }
    for (std::size_t p = 0; p < side * side; ++p) img[p] = std::floor(img[p]);
  }
  ds.onehot = grcan::one_hot(ds.labels, 3);
  return ds;
}

}  // namespace synth
