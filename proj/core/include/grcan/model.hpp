#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "grcan/boost.hpp"
#include "grcan/config.hpp"
#include "grcan/dataset.hpp"
#include "grcan/forest.hpp"
#include "grcan/pipeline.hpp"

namespace grcan {

struct PredictResult {
  std::vector<int> labels;
  Tensor distributions;  // [B, K] after the full boost stack
  Tensor base_distributions;  // [B, K] from the base forest alone
};

// The assembled learner: one shared input pipeline feeding the base forest
// and every boost module. Forward passes never mutate parameters, so a
// trained instance can serve concurrent predictions.
class Model {
public:
  Model(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }

  PipelineState& pipeline() { return pipeline_; }
  ForestParams& base_forest() { return base_; }
  const ForestParams& base_forest() const { return base_; }
  std::vector<BoostModule>& modules() { return modules_; }
  const std::vector<BoostModule>& modules() const { return modules_; }

  Scaler& scaler() { return scaler_; }
  const Scaler& scaler() const { return scaler_; }
  std::vector<std::string>& class_names() { return class_names_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  std::string& dataset_kind() { return dataset_kind_; }
  const std::string& dataset_kind() const { return dataset_kind_; }
  std::uint32_t& epochs_trained() { return epochs_trained_; }
  std::uint32_t epochs_trained() const { return epochs_trained_; }

  // Base-forest distribution for a batch of (already normalized) rows.
  Tensor base_distribution(const Tensor& rows);

  // Full staged prediction: encode -> fc -> base forest -> boost combine.
  PredictResult predict(const Tensor& rows);

  // Trainable parameters in declared order: pipeline, base forest decision
  // weights, base leaf logits, then each module's weights and logits.
  std::vector<Parameter*> parameters();
  std::size_t parameter_count();

private:
  ModelConfig cfg_;
  std::uint64_t seed_;
  PipelineState pipeline_;
  ForestParams base_;
  std::vector<BoostModule> modules_;
  Scaler scaler_;
  std::vector<std::string> class_names_;
  std::string dataset_kind_ = "csv";
  std::uint32_t epochs_trained_ = 0;
};

}  // namespace grcan
