#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace grcan {

// Dense row-major n-dimensional array of doubles. All arithmetic in the
// library runs in 64-bit floats.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // 2-d accessors used by the matrix-shaped parameters.
  double& at(std::size_t r, std::size_t c) { return values_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * shape_[1] + c]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  void fill(double v);
  void zero() { fill(0.0); }
  bool all_finite() const;

  // Reinterprets the buffer under a new shape with the same element count.
  Tensor reshaped(std::vector<std::size_t> shape) const;

private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

std::string shape_to_string(const std::vector<std::size_t>& shape);

// Throws DimensionError naming both shapes.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

std::size_t shape_product(const std::vector<std::size_t>& shape);

}  // namespace grcan
