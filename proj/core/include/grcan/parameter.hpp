#pragma once

#include <string>
#include <utility>

#include "grcan/rng.hpp"
#include "grcan/tensor.hpp"

namespace grcan {

// A trainable tensor with its accumulated gradient. grad always mirrors the
// value shape; grad_ready flips on when a backward pass has written to it.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool grad_ready = false;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() {
    grad.zero();
    grad_ready = false;
  }

  // Uniform in [-s, s] with s = 1/sqrt(fan_in).
  static Parameter uniform_init(std::string name, std::vector<std::size_t> shape,
                                std::size_t fan_in, Rng& rng) {
    Tensor v(std::move(shape));
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.uniform_in(-s, s);
    return Parameter(std::move(name), std::move(v));
  }

  static Parameter zeros_init(std::string name, std::vector<std::size_t> shape) {
    return Parameter(std::move(name), Tensor(std::move(shape)));
  }
};

}  // namespace grcan
