#pragma once

#include <cstddef>
#include <unordered_map>

#include "grcan/parameter.hpp"
#include "grcan/tensor.hpp"

namespace grcan {

// Squared-gradient accumulator update:
//
//   G <- accum_decay * G + g (.) g
//   theta <- theta - eta * g / sqrt(G + epsilon)
//
// With accum_decay = 1 (the default) G grows monotonically and the
// per-entry effective step eta/sqrt(G + eps) never increases; accum_decay
// < 1 gives the exponentially-decaying (RMSProp-style) variant.
struct OptimizerConfig {
  double eta = 0.001;
  double epsilon = 1e-8;
  double accum_decay = 1.0;
};

class RmsProp {
public:
  explicit RmsProp(OptimizerConfig cfg) : cfg_(cfg) {}

  const OptimizerConfig& config() const { return cfg_; }

  // Applies one update to param from its accumulated gradient, then clears
  // the gradient. Throws StateError if no backward pass populated it.
  void step(Parameter& param);

  // Accumulator for a parameter, created lazily on first step.
  const Tensor& accum(const Parameter& param) const;
  bool has_state(const Parameter& param) const;

private:
  OptimizerConfig cfg_;
  std::unordered_map<const Parameter*, Tensor> state_;
};

// Single-tensor form of the update rule; state must match param's shape.
void rmsprop_update(Parameter& param, Tensor& accum, const OptimizerConfig& cfg);

}  // namespace grcan
