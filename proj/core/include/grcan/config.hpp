#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grcan/dataset.hpp"
#include "grcan/pipeline.hpp"

namespace grcan {

struct ForestConfig {
  std::size_t n_tree = 20;
  std::size_t n_depth = 3;
};

struct BoostConfig {
  std::size_t modules = 1;
  std::vector<double> rho;  // one per module; a single value is broadcast

  double rho_for(std::size_t m) const { return rho.empty() ? 1.0 : rho[std::min(m, rho.size() - 1)]; }
};

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 16;
  double eta_theta = 0.001;
  double eta_p = 0.001;
  double epsilon = 1e-8;
  double accum_decay = 1.0;  // 1.0 = monotone accumulation; < 1 decays
  bool reshuffle_each_epoch = false;  // default: shuffle once up front
  bool log_train_accuracy = true;
  std::uint64_t seed = 42;

  void validate(std::size_t dataset_size) const;
};

// Architecture snapshot carried by the model and its checkpoints.
struct ModelConfig {
  PipelineConfig pipeline;
  ForestConfig forest;
  BoostConfig boost;
  std::size_t n_class = 0;

  void validate() const;
};

struct SplitSpec {
  enum class Mode { Fraction, Counts, Predefined };
  Mode mode = Mode::Fraction;
  double test_fraction = 0.2;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

struct DatasetSpec {
  std::string kind;  // "csv" or "idx"
  std::string path;  // csv
  CsvSchema schema;  // csv
  std::string train_images, train_labels, test_images, test_labels;  // idx
  SplitSpec split;
  std::size_t subset_train = 0;  // 0 = use the full training split
  std::string name;
};

// Everything a CLI run needs. Sweep-range validation covers the
// hyperparameters the model family is specified over; out-of-range values
// need the explicit override flag.
struct RunConfig {
  DatasetSpec dataset;
  PipelineConfig pipeline;
  ForestConfig forest;
  BoostConfig boost;
  TrainConfig train;
  std::string output_dir = "runs/out";

  void validate(bool override_sweep_limits) const;
};

RunConfig parse_run_config(const std::string& json_text, const std::string& origin);
RunConfig load_run_config(const std::string& path);

std::string model_config_to_json(const ModelConfig& cfg,
                                 const std::vector<std::string>& class_names,
                                 const std::string& dataset_kind);
void model_config_from_json(const std::string& text, ModelConfig& cfg,
                            std::vector<std::string>& class_names, std::string& dataset_kind);

}  // namespace grcan
