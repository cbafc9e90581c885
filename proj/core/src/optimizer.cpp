#include "grcan/optimizer.hpp"

#include <cmath>

#include "grcan/errors.hpp"

namespace grcan {

void rmsprop_update(Parameter& param, Tensor& accum, const OptimizerConfig& cfg) {
  if (!param.grad_ready) {
    throw StateError("update of '" + param.name + "' requested but no gradient was accumulated");
  }
  if (!accum.same_shape(param.value)) {
    throw StateError("optimizer state for '" + param.name + "' has shape " +
                     shape_to_string(accum.shape()) + ", parameter has " +
                     shape_to_string(param.value.shape()));
  }
  double* g = param.grad.data();
  double* G = accum.data();
  double* v = param.value.data();
  for (std::size_t i = 0; i < param.value.size(); ++i) {
    G[i] = cfg.accum_decay * G[i] + g[i] * g[i];
    v[i] -= cfg.eta * g[i] / std::sqrt(G[i] + cfg.epsilon);
  }
  param.zero_grad();
}

void RmsProp::step(Parameter& param) {
  auto it = state_.find(&param);
  if (it == state_.end()) {
    it = state_.emplace(&param, Tensor(param.value.shape())).first;
  }
  rmsprop_update(param, it->second, cfg_);
}

const Tensor& RmsProp::accum(const Parameter& param) const {
  static const Tensor empty;
  auto it = state_.find(&param);
  return it == state_.end() ? empty : it->second;
}

bool RmsProp::has_state(const Parameter& param) const { return state_.count(&param) != 0; }

}  // namespace grcan
