#include "grcan/model.hpp"

#include "grcan/autograd.hpp"
#include "grcan/errors.hpp"

namespace grcan {

namespace {

ForestParams make_forest(const ModelConfig& cfg, std::size_t in_width, Rng& rng,
                         const std::string& prefix) {
  return ForestParams(cfg.forest.n_tree, TreeShape(cfg.forest.n_depth), cfg.n_class, in_width,
                      rng, prefix);
}

Rng seeded(std::uint64_t seed) { return Rng(seed); }

}  // namespace

Model::Model(ModelConfig cfg, std::uint64_t seed)
    : cfg_([&cfg] {
        cfg.validate();
        return cfg;
      }()),
      seed_(seed),
      pipeline_([this, seed] {
        Rng rng = seeded(seed);
        return PipelineState(cfg_.pipeline, rng);
      }()),
      base_([this, seed] {
        // Parameter groups draw from independent streams so adding a module
        // never shifts the base learner's initialization.
        Rng rng = seeded(seed + 1);
        return make_forest(cfg_, pipeline_.fc_out_width(), rng, "base");
      }()) {
  for (std::size_t m = 0; m < cfg_.boost.modules; ++m) {
    Rng rng = seeded(seed + 2 + m);
    modules_.emplace_back(m + 1,
                          make_forest(cfg_, pipeline_.fc_out_width(), rng,
                                      "gb" + std::to_string(m + 1)),
                          cfg_.boost.rho_for(m));
  }
}

Tensor Model::base_distribution(const Tensor& rows) {
  Graph g;
  Node* h = pipeline_.build_encoder(g, g.input(rows));
  Node* x_fc = pipeline_.build_fc(g, h);
  return forest_forward(g, x_fc, base_)->value;
}

PredictResult Model::predict(const Tensor& rows) {
  Graph g;
  Node* h = pipeline_.build_encoder(g, g.input(rows));
  Node* x_fc = pipeline_.build_fc(g, h);
  Node* base = forest_forward(g, x_fc, base_);
  std::vector<Node*> module_out;
  module_out.reserve(modules_.size());
  for (BoostModule& m : modules_) {
    module_out.push_back(forest_forward(g, x_fc, m.forest));
  }

  const std::size_t batch = rows.dim(0), k = cfg_.n_class;
  PredictResult res;
  res.base_distributions = base->value;
  res.distributions = Tensor({batch, k});
  res.labels.resize(batch);
  std::vector<double> f(k);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* fb = base->value.data() + b * k;
    f.assign(fb, fb + k);
    for (std::size_t m = 0; m < modules_.size(); ++m) {
      const double* err = module_out[m]->value.data() + b * k;
      f = combine_step(f, std::span<const double>(err, k), modules_[m].rho);
    }
    for (std::size_t c = 0; c < k; ++c) res.distributions[b * k + c] = f[c];
    res.labels[b] = static_cast<int>(argmax_label(f));
  }
  return res;
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out = pipeline_.params();
  for (Parameter* p : base_.decision_params()) out.push_back(p);
  for (Parameter* p : base_.leaf_params()) out.push_back(p);
  for (BoostModule& m : modules_) {
    for (Parameter* p : m.forest.decision_params()) out.push_back(p);
    for (Parameter* p : m.forest.leaf_params()) out.push_back(p);
  }
  return out;
}

std::size_t Model::parameter_count() {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.size();
  return n;
}

}  // namespace grcan
