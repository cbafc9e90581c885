#pragma once

#include <functional>
#include <ostream>
#include <span>

#include "grcan/config.hpp"
#include "grcan/dataset.hpp"
#include "grcan/metrics.hpp"
#include "grcan/model.hpp"
#include "grcan/optimizer.hpp"

namespace grcan {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double total_loss = 0.0;
  double cls_loss = 0.0;
  double recon_loss = 0.0;
  std::vector<double> module_losses;
  double train_accuracy = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;

  static void write_csv_header(std::ostream& out, std::size_t n_modules);
  static void write_csv_row(std::ostream& out, const EpochRecord& rec);
  void write_csv(std::ostream& out, std::size_t n_modules) const;
};

enum class UpdateKind { BaseTheta, BaseLeaf, ModuleTheta, ModuleLeaf };

struct UpdateEvent {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  UpdateKind kind = UpdateKind::BaseTheta;
  std::size_t module = 0;  // 1-based for module events
};

using UpdateHook = std::function<void(const UpdateEvent&)>;

// Per-sample categorical cross-entropy with probabilities clipped to
// [1e-7, 1]. Entries of p where y is 0 never contribute.
double cross_entropy(std::span<const double> y_onehot, std::span<const double> p);

// Executes the update schedule for one mini-batch, enforcing the order:
// base decision/pipeline step, base leaf step, then modules 1..K. Calling
// a step out of order throws StateError.
class BatchStepper {
public:
  using StepCallback = std::function<void(UpdateKind, std::size_t)>;

  BatchStepper(Model& model, RmsProp& opt_theta, RmsProp& opt_p, Tensor batch_x, Tensor batch_y,
               StepCallback cb = nullptr);

  struct BaseLosses {
    double total = 0.0;
    double cls = 0.0;
    double recon = 0.0;
  };

  // Joint loss (cross-entropy + reconstruction) and its gradient step on
  // the pipeline and base decision weights, leaf distributions held fixed.
  BaseLosses step_base_theta();

  // Re-forwards with the new weights and steps the base leaf logits, then
  // re-projects the cached distributions.
  void step_base_leaves();

  // Trains boost module m (1-based) against softmax(y - f^{m-1}) computed
  // from the current parameters: a pipeline+module weight step followed by
  // a module leaf step. Returns the module's loss before its update.
  double step_module(std::size_t module_index);

  // Staged prediction f^{m} for the batch using the current parameters.
  Tensor staged_prediction(std::size_t n_modules);

private:
  Model& model_;
  RmsProp& opt_theta_;
  RmsProp& opt_p_;
  Tensor x_;
  Tensor y_;
  StepCallback cb_;
  bool theta_done_ = false;
  bool leaves_done_ = false;
  std::size_t next_module_ = 1;
};

// Algorithm: shuffle the training rows once up front (optionally per
// epoch), then for every epoch and batch run the BatchStepper schedule.
// Deterministic for a fixed (model seed, config) pair. Throws
// DivergenceError naming epoch and batch when a loss turns non-finite.
TrainLog train(Model& model, const Dataset& ds, std::span<const std::size_t> train_indices,
               const TrainConfig& cfg, std::ostream* log_stream = nullptr,
               const UpdateHook& hook = nullptr);

struct EvalResult {
  MetricsBundle metrics;
  ConfusionMatrix cm;
  std::vector<int> labels;
  std::vector<int> predictions;
  Tensor distributions;  // [N, K]
};

// Runs the staged prediction pipeline over the given rows and aggregates
// classification metrics.
EvalResult evaluate(Model& model, const Dataset& ds, std::span<const std::size_t> indices);

// Gathers dataset rows/targets into batch tensors.
Tensor gather_rows(const Dataset& ds, std::span<const std::size_t> indices);
Tensor gather_onehot(const Dataset& ds, std::span<const std::size_t> indices);

}  // namespace grcan
