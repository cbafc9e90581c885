#include "grcan/boost.hpp"

#include <cassert>
#include <cmath>
#include <numeric>

#include "grcan/errors.hpp"

namespace grcan {

std::vector<double> residual_target(std::span<const double> y_onehot,
                                    std::span<const double> f_prev) {
  if (y_onehot.size() != f_prev.size()) {
    throw DimensionError("residual_target: label width " + std::to_string(y_onehot.size()) +
                         " vs prediction width " + std::to_string(f_prev.size()));
  }
  std::vector<double> out(y_onehot.size());
  double mx = y_onehot[0] - f_prev[0];
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = y_onehot[i] - f_prev[i];
    mx = std::max(mx, out[i]);
  }
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> combine_step(std::span<const double> f_prev, std::span<const double> err,
                                 double rho) {
  if (rho <= 0.0) throw ParameterError("combine_step: rho must be positive");
  if (f_prev.size() != err.size()) {
    throw DimensionError("combine_step: widths " + std::to_string(f_prev.size()) + " vs " +
                         std::to_string(err.size()));
  }
  std::vector<double> out(f_prev.size());
  const double inv = 1.0 / (1.0 + rho);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (f_prev[i] + rho * err[i]) * inv;
#ifndef NDEBUG
  const double sum = std::accumulate(out.begin(), out.end(), 0.0);
  assert(std::abs(sum - 1.0) < 1e-9 && "combine_step inputs were not unit-sum distributions");
#endif
  return out;
}

StagedPrediction boost_forward(std::span<const double> x_fc, std::span<const double> base_dist,
                               const std::vector<BoostModule>& stack) {
  StagedPrediction s;
  s.dist.assign(base_dist.begin(), base_dist.end());
  for (const BoostModule& m : stack) {
    std::vector<double> err = forest_predict(x_fc, m.forest);
    s.dist = combine_step(s.dist, err, m.rho);
    s.module_errors.push_back(std::move(err));
    ++s.stage;
  }
  return s;
}

}  // namespace grcan
