#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "grcan/forest.hpp"

namespace grcan {

// A residual-fitting forest head. The module owns only its forest; the
// input pipeline is shared with the base learner by construction (the model
// holds exactly one pipeline that every head reads from).
struct BoostModule {
  BoostModule(std::size_t idx, ForestParams f, double step)
      : index(idx), forest(std::move(f)), rho(step) {}

  std::size_t index;  // 1-based stage number
  ForestParams forest;
  double rho;
};

// Prediction after stage m together with the residual-fit outputs of the
// stages that produced it.
struct StagedPrediction {
  std::size_t stage = 0;
  std::vector<double> dist;
  std::vector<std::vector<double>> module_errors;
};

// softmax(y - f_prev): the fitting target for the next boost module.
std::vector<double> residual_target(std::span<const double> y_onehot,
                                    std::span<const double> f_prev);

// (f_prev + rho * err) rescaled back to unit sum. When both inputs are unit
// sum the rescale factor is exactly 1 + rho.
std::vector<double> combine_step(std::span<const double> f_prev, std::span<const double> err,
                                 double rho);

// Folds combine_step over the stack in order, each module contributing its
// forest output on x_fc.
StagedPrediction boost_forward(std::span<const double> x_fc, std::span<const double> base_dist,
                               const std::vector<BoostModule>& stack);

}  // namespace grcan
