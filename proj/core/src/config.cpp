#include "grcan/config.hpp"

#include <fstream>
#include <sstream>

#include "grcan/errors.hpp"
#include "json.hpp"

namespace grcan {

using nlohmann::json;

void TrainConfig::validate(std::size_t dataset_size) const {
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (dataset_size > 0 && batch_size > dataset_size) {
    throw ConfigError("train.batch_size " + std::to_string(batch_size) +
                      " exceeds training set size " + std::to_string(dataset_size));
  }
  if (eta_theta <= 0.0) throw ConfigError("train.eta_theta must be positive");
  if (eta_p <= 0.0) throw ConfigError("train.eta_p must be positive");
  if (epsilon <= 0.0) throw ConfigError("train.epsilon must be positive");
  if (accum_decay <= 0.0 || accum_decay > 1.0) {
    throw ConfigError("train.accum_decay must be in (0, 1]");
  }
}

void ModelConfig::validate() const {
  pipeline.validate();
  if (forest.n_tree == 0) throw ConfigError("forest.n_tree must be >= 1");
  if (forest.n_depth < 1) throw ConfigError("forest.n_depth must be >= 1");
  if (n_class < 2) throw ConfigError("model needs at least two classes");
  for (double r : boost.rho) {
    if (r <= 0.0) throw ConfigError("boost.rho entries must be positive");
  }
}

void RunConfig::validate(bool override_sweep_limits) const {
  pipeline.validate();
  if (dataset.kind != "csv" && dataset.kind != "idx") {
    throw ConfigError("dataset.kind must be \"csv\" or \"idx\", got \"" + dataset.kind + "\"");
  }
  if (!override_sweep_limits) {
    if (forest.n_tree < 5 || forest.n_tree > 100) {
      throw ConfigError("forest.n_tree " + std::to_string(forest.n_tree) +
                        " outside the tuned range [5, 100]; pass --override-sweep-limits to "
                        "allow it");
    }
    if (forest.n_depth < 2 || forest.n_depth > 8) {
      throw ConfigError("forest.n_depth " + std::to_string(forest.n_depth) +
                        " outside the tuned range [2, 8]; pass --override-sweep-limits to allow "
                        "it");
    }
    if (boost.modules > 2) {
      throw ConfigError("boost.modules " + std::to_string(boost.modules) +
                        " outside the tuned range [0, 2]; pass --override-sweep-limits to allow "
                        "it");
    }
  }
  if (!boost.rho.empty() && boost.rho.size() != 1 && boost.rho.size() != boost.modules) {
    throw ConfigError("boost.rho must hold one value or one per module");
  }
  for (double r : boost.rho) {
    if (r <= 0.0) throw ConfigError("boost.rho entries must be positive");
  }
  train.validate(0);
}

namespace {

ColumnRef column_ref_from_json(const json& j, const std::string& field) {
  if (j.is_number_unsigned() || j.is_number_integer()) {
    const auto v = j.get<long long>();
    if (v < 0) throw ConfigError(field + ": column index must be >= 0");
    return ColumnRef(static_cast<std::size_t>(v));
  }
  if (j.is_string()) return ColumnRef(j.get<std::string>());
  throw ConfigError(field + ": expected a column index or name");
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

PipelineConfig pipeline_from_json(const json& j) {
  PipelineConfig p;
  if (j.contains("input_shape")) {
    p.input_shape = j.at("input_shape").get<std::vector<std::size_t>>();
  }
  p.ae_layers = get_or<std::size_t>(j, "ae_layers", 2);
  if (j.contains("ae_channels")) {
    p.ae_channels = j.at("ae_channels").get<std::vector<std::size_t>>();
  } else {
    p.ae_channels.assign(p.ae_layers, 8);
  }
  p.kernel = get_or<std::size_t>(j, "kernel", 3);
  p.fc_layers = get_or<std::size_t>(j, "fc_layers", 1);
  if (j.contains("fc_widths")) {
    p.fc_widths = j.at("fc_widths").get<std::vector<std::size_t>>();
  } else if (p.fc_layers > 0) {
    p.fc_widths.assign(p.fc_layers, 32);
  }
  p.activation = activation_from_string(get_or<std::string>(j, "activation", "sigmoid"));
  return p;
}

json pipeline_to_json(const PipelineConfig& p) {
  return json{{"input_shape", p.input_shape}, {"ae_layers", p.ae_layers},
              {"ae_channels", p.ae_channels}, {"kernel", p.kernel},
              {"fc_layers", p.fc_layers},     {"fc_widths", p.fc_widths},
              {"activation", activation_name(p.activation)}};
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  try {
    RunConfig rc;
    const json& d = j.at("dataset");
    rc.dataset.kind = d.at("kind").get<std::string>();
    rc.dataset.name = get_or<std::string>(d, "name", "");
    if (rc.dataset.kind == "csv") {
      rc.dataset.path = d.at("path").get<std::string>();
      if (d.contains("label_col")) {
        rc.dataset.schema.label_col = column_ref_from_json(d.at("label_col"), "dataset.label_col");
      }
      if (d.contains("ignore_cols")) {
        for (const auto& c : d.at("ignore_cols")) {
          rc.dataset.schema.ignore_cols.push_back(column_ref_from_json(c, "dataset.ignore_cols"));
        }
      }
      if (d.contains("has_header")) rc.dataset.schema.has_header = d.at("has_header").get<bool>();
    } else if (rc.dataset.kind == "idx") {
      rc.dataset.train_images = d.at("train_images").get<std::string>();
      rc.dataset.train_labels = d.at("train_labels").get<std::string>();
      rc.dataset.test_images = d.at("test_images").get<std::string>();
      rc.dataset.test_labels = d.at("test_labels").get<std::string>();
      rc.dataset.split.mode = SplitSpec::Mode::Predefined;
    }
    if (d.contains("split")) {
      const json& s = d.at("split");
      const std::string mode = get_or<std::string>(s, "mode", "fraction");
      if (mode == "fraction") {
        rc.dataset.split.mode = SplitSpec::Mode::Fraction;
        rc.dataset.split.test_fraction = get_or<double>(s, "test_fraction", 0.2);
      } else if (mode == "counts") {
        rc.dataset.split.mode = SplitSpec::Mode::Counts;
        rc.dataset.split.n_train = s.at("train").get<std::size_t>();
        rc.dataset.split.n_test = s.at("test").get<std::size_t>();
      } else if (mode == "predefined") {
        rc.dataset.split.mode = SplitSpec::Mode::Predefined;
      } else {
        throw ConfigError("dataset.split.mode must be fraction|counts|predefined");
      }
    }
    rc.dataset.subset_train = get_or<std::size_t>(d, "subset_train", 0);

    if (j.contains("pipeline")) rc.pipeline = pipeline_from_json(j.at("pipeline"));
    if (j.contains("forest")) {
      rc.forest.n_tree = get_or<std::size_t>(j.at("forest"), "n_tree", rc.forest.n_tree);
      rc.forest.n_depth = get_or<std::size_t>(j.at("forest"), "n_depth", rc.forest.n_depth);
    }
    if (j.contains("boost")) {
      rc.boost.modules = get_or<std::size_t>(j.at("boost"), "modules", rc.boost.modules);
      if (j.at("boost").contains("rho")) {
        const json& r = j.at("boost").at("rho");
        if (r.is_array()) {
          rc.boost.rho = r.get<std::vector<double>>();
        } else {
          rc.boost.rho = {r.get<double>()};
        }
      }
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      rc.train.epochs = get_or<std::size_t>(t, "epochs", rc.train.epochs);
      rc.train.batch_size = get_or<std::size_t>(t, "batch_size", rc.train.batch_size);
      rc.train.eta_theta = get_or<double>(t, "eta_theta", rc.train.eta_theta);
      rc.train.eta_p = get_or<double>(t, "eta_p", rc.train.eta_p);
      rc.train.epsilon = get_or<double>(t, "epsilon", rc.train.epsilon);
      rc.train.accum_decay = get_or<double>(t, "accum_decay", rc.train.accum_decay);
      rc.train.reshuffle_each_epoch =
          get_or<bool>(t, "reshuffle_each_epoch", rc.train.reshuffle_each_epoch);
      rc.train.log_train_accuracy =
          get_or<bool>(t, "log_train_accuracy", rc.train.log_train_accuracy);
      rc.train.seed = get_or<std::uint64_t>(t, "seed", rc.train.seed);
    }
    rc.output_dir = get_or<std::string>(j, "output_dir", rc.output_dir);
    return rc;
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path);
}

std::string model_config_to_json(const ModelConfig& cfg,
                                 const std::vector<std::string>& class_names,
                                 const std::string& dataset_kind) {
  json j{{"pipeline", pipeline_to_json(cfg.pipeline)},
         {"forest", json{{"n_tree", cfg.forest.n_tree}, {"n_depth", cfg.forest.n_depth}}},
         {"boost", json{{"modules", cfg.boost.modules}, {"rho", cfg.boost.rho}}},
         {"n_class", cfg.n_class},
         {"class_names", class_names},
         {"dataset_kind", dataset_kind}};
  return j.dump();
}

void model_config_from_json(const std::string& text, ModelConfig& cfg,
                            std::vector<std::string>& class_names, std::string& dataset_kind) {
  json j;
  try {
    j = json::parse(text);
    cfg.pipeline = pipeline_from_json(j.at("pipeline"));
    cfg.forest.n_tree = j.at("forest").at("n_tree").get<std::size_t>();
    cfg.forest.n_depth = j.at("forest").at("n_depth").get<std::size_t>();
    cfg.boost.modules = j.at("boost").at("modules").get<std::size_t>();
    cfg.boost.rho = j.at("boost").at("rho").get<std::vector<double>>();
    cfg.n_class = j.at("n_class").get<std::size_t>();
    class_names = j.at("class_names").get<std::vector<std::string>>();
    dataset_kind = j.at("dataset_kind").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint config blob: ") + e.what());
  }
}

}  // namespace grcan
