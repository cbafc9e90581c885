#include "grcan/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "grcan/autograd.hpp"
#include "grcan/errors.hpp"

namespace grcan {

double cross_entropy(std::span<const double> y_onehot, std::span<const double> p) {
  if (y_onehot.size() != p.size()) {
    throw DimensionError("cross_entropy: label width " + std::to_string(y_onehot.size()) +
                         " vs prediction width " + std::to_string(p.size()));
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (y_onehot[i] != 0.0) {
      loss -= y_onehot[i] * std::log(std::clamp(p[i], Graph::kProbFloor, 1.0));
    }
  }
  return loss;
}

Tensor gather_rows(const Dataset& ds, std::span<const std::size_t> indices) {
  std::vector<std::size_t> shape{indices.size()};
  shape.insert(shape.end(), ds.feature_shape.begin(), ds.feature_shape.end());
  Tensor out(shape);
  const std::size_t width = ds.feature_width();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const double* src = ds.features.data() + indices[i] * width;
    std::copy(src, src + width, out.data() + i * width);
  }
  return out;
}

Tensor gather_onehot(const Dataset& ds, std::span<const std::size_t> indices) {
  Tensor out({indices.size(), ds.n_class});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const double* src = ds.onehot.data() + indices[i] * ds.n_class;
    std::copy(src, src + ds.n_class, out.data() + i * ds.n_class);
  }
  return out;
}

BatchStepper::BatchStepper(Model& model, RmsProp& opt_theta, RmsProp& opt_p, Tensor batch_x,
                           Tensor batch_y, StepCallback cb)
    : model_(model),
      opt_theta_(opt_theta),
      opt_p_(opt_p),
      x_(std::move(batch_x)),
      y_(std::move(batch_y)),
      cb_(std::move(cb)) {}

BatchStepper::BaseLosses BatchStepper::step_base_theta() {
  if (theta_done_) throw StateError("base weight step already taken for this batch");

  Graph g;
  Node* x_in = g.input(x_);
  Node* h = model_.pipeline().build_encoder(g, x_in);
  Node* x_rec = model_.pipeline().build_decoder(g, h);
  Node* x_fc = model_.pipeline().build_fc(g, h);
  Node* dist = forest_forward(g, x_fc, model_.base_forest());
  Node* cls = g.cross_entropy(dist, y_);

  std::vector<std::size_t> with_ch{x_.dim(0), 1};
  with_ch.insert(with_ch.end(), x_.shape().begin() + 1, x_.shape().end());
  Node* recon = g.squared_error(x_rec, x_.reshaped(with_ch));
  Node* total = g.add(cls, recon);
  g.backward(total);

  BaseLosses losses{total->value[0], cls->value[0], recon->value[0]};
  if (cb_) cb_(UpdateKind::BaseTheta, 0);
  for (Parameter* p : model_.pipeline().params()) opt_theta_.step(*p);
  for (Parameter* p : model_.base_forest().decision_params()) opt_theta_.step(*p);
  for (Parameter* p : model_.base_forest().leaf_params()) p->zero_grad();
  theta_done_ = true;
  return losses;
}

void BatchStepper::step_base_leaves() {
  if (!theta_done_) throw StateError("base leaf step requested before the base weight step");
  if (leaves_done_) throw StateError("base leaf step already taken for this batch");

  // Fresh forward with the just-updated weights; the reconstruction term
  // does not touch the leaf logits, so the decoder is skipped.
  Graph g;
  Node* h = model_.pipeline().build_encoder(g, g.input(x_));
  Node* x_fc = model_.pipeline().build_fc(g, h);
  Node* dist = forest_forward(g, x_fc, model_.base_forest());
  Node* cls = g.cross_entropy(dist, y_);
  g.backward(cls);

  if (cb_) cb_(UpdateKind::BaseLeaf, 0);
  update_leaf_distributions(model_.base_forest(), opt_p_);
  for (Parameter* p : model_.pipeline().params()) p->zero_grad();
  for (Parameter* p : model_.base_forest().decision_params()) p->zero_grad();
  leaves_done_ = true;
}

Tensor BatchStepper::staged_prediction(std::size_t n_modules) {
  Graph g;
  Node* h = model_.pipeline().build_encoder(g, g.input(x_));
  Node* x_fc = model_.pipeline().build_fc(g, h);
  Node* base = forest_forward(g, x_fc, model_.base_forest());
  std::vector<Node*> outs;
  for (std::size_t m = 0; m < n_modules; ++m) {
    outs.push_back(forest_forward(g, x_fc, model_.modules()[m].forest));
  }
  const std::size_t batch = x_.dim(0), k = model_.config().n_class;
  Tensor staged({batch, k});
  std::vector<double> f(k);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* fb = base->value.data() + b * k;
    f.assign(fb, fb + k);
    for (std::size_t m = 0; m < n_modules; ++m) {
      const double* err = outs[m]->value.data() + b * k;
      f = combine_step(f, std::span<const double>(err, k), model_.modules()[m].rho);
    }
    std::copy(f.begin(), f.end(), staged.data() + b * k);
  }
  return staged;
}

double BatchStepper::step_module(std::size_t module_index) {
  if (!theta_done_ || !leaves_done_) {
    throw StateError("boost module " + std::to_string(module_index) +
                     " stepped before the base learner");
  }
  if (module_index != next_module_) {
    throw StateError("boost module " + std::to_string(module_index) + " stepped out of order; " +
                     "expected module " + std::to_string(next_module_));
  }
  if (module_index > model_.modules().size()) {
    throw StateError("boost module " + std::to_string(module_index) + " does not exist");
  }
  BoostModule& module = model_.modules()[module_index - 1];

  // Fitting target softmax(y - f^{m-1}) from the current parameters; the
  // stage history is a constant for the module's own update.
  const Tensor f_prev = staged_prediction(module_index - 1);
  const std::size_t batch = x_.dim(0), k = model_.config().n_class;
  Tensor target({batch, k});
  for (std::size_t b = 0; b < batch; ++b) {
    const auto t = residual_target(
        std::span<const double>(y_.data() + b * k, k),
        std::span<const double>(f_prev.data() + b * k, k));
    std::copy(t.begin(), t.end(), target.data() + b * k);
  }

  // Weight step: shared pipeline plus the module's decision weights.
  double loss_value;
  {
    Graph g;
    Node* h = model_.pipeline().build_encoder(g, g.input(x_));
    Node* x_fc = model_.pipeline().build_fc(g, h);
    Node* dist = forest_forward(g, x_fc, module.forest);
    Node* loss = g.cross_entropy(dist, target);
    g.backward(loss);
    loss_value = loss->value[0];
    if (cb_) cb_(UpdateKind::ModuleTheta, module_index);
    for (Parameter* p : model_.pipeline().params()) opt_theta_.step(*p);
    for (Parameter* p : module.forest.decision_params()) opt_theta_.step(*p);
    for (Parameter* p : module.forest.leaf_params()) p->zero_grad();
  }

  // Leaf step, re-forwarded against the same target.
  {
    Graph g;
    Node* h = model_.pipeline().build_encoder(g, g.input(x_));
    Node* x_fc = model_.pipeline().build_fc(g, h);
    Node* dist = forest_forward(g, x_fc, module.forest);
    Node* loss = g.cross_entropy(dist, target);
    g.backward(loss);
    if (cb_) cb_(UpdateKind::ModuleLeaf, module_index);
    update_leaf_distributions(module.forest, opt_p_);
    for (Parameter* p : model_.pipeline().params()) p->zero_grad();
    for (Parameter* p : module.forest.decision_params()) p->zero_grad();
  }

  ++next_module_;
  return loss_value;
}

namespace {

double train_accuracy(Model& model, const Dataset& ds,
                      std::span<const std::size_t> indices) {
  constexpr std::size_t kChunk = 256;
  std::size_t correct = 0;
  for (std::size_t off = 0; off < indices.size(); off += kChunk) {
    const std::size_t n = std::min(kChunk, indices.size() - off);
    const auto chunk = indices.subspan(off, n);
    PredictResult pr = model.predict(gather_rows(ds, chunk));
    for (std::size_t i = 0; i < n; ++i) {
      correct += pr.labels[i] == ds.labels[chunk[i]] ? 1 : 0;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

}  // namespace

TrainLog train(Model& model, const Dataset& ds, std::span<const std::size_t> train_indices,
               const TrainConfig& cfg, std::ostream* log_stream, const UpdateHook& hook) {
  if (ds.size() == 0 || train_indices.empty()) {
    throw ConfigError("training requested on an empty dataset");
  }
  cfg.validate(train_indices.size());

  const std::size_t n = train_indices.size();
  const std::size_t n_modules = model.modules().size();

  RmsProp opt_theta({cfg.eta_theta, cfg.epsilon, cfg.accum_decay});
  RmsProp opt_p({cfg.eta_p, cfg.epsilon, cfg.accum_decay});

  std::vector<std::size_t> order(train_indices.begin(), train_indices.end());
  Rng shuffle_rng(cfg.seed + 0x5e11ed);
  shuffle_rng.shuffle(order);

  TrainLog log;
  if (log_stream) TrainLog::write_csv_header(*log_stream, n_modules);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.reshuffle_each_epoch && epoch > 1) shuffle_rng.shuffle(order);

    double sum_total = 0.0, sum_cls = 0.0, sum_recon = 0.0;
    std::vector<double> sum_module(n_modules, 0.0);
    std::size_t batch_no = 0;

    for (std::size_t off = 0; off < n; off += cfg.batch_size, ++batch_no) {
      const std::size_t b = std::min(cfg.batch_size, n - off);
      const std::span<const std::size_t> batch_idx(order.data() + off, b);

      auto wrap = [&hook, epoch, batch_no](UpdateKind kind, std::size_t module) {
        if (hook) hook(UpdateEvent{epoch, batch_no, kind, module});
      };
      BatchStepper stepper(model, opt_theta, opt_p, gather_rows(ds, batch_idx),
                           gather_onehot(ds, batch_idx), wrap);

      const auto losses = stepper.step_base_theta();
      if (!std::isfinite(losses.total)) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + " batch " +
                              std::to_string(batch_no) + " (loss " +
                              std::to_string(losses.total) + ")");
      }
      stepper.step_base_leaves();
      const double w = static_cast<double>(b);
      sum_total += losses.total * w;
      sum_cls += losses.cls * w;
      sum_recon += losses.recon * w;

      for (std::size_t m = 1; m <= n_modules; ++m) {
        const double ml = stepper.step_module(m);
        if (!std::isfinite(ml)) {
          throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                                " batch " + std::to_string(batch_no) + " (module " +
                                std::to_string(m) + " loss " + std::to_string(ml) + ")");
        }
        sum_module[m - 1] += ml * w;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.total_loss = sum_total / static_cast<double>(n);
    rec.cls_loss = sum_cls / static_cast<double>(n);
    rec.recon_loss = sum_recon / static_cast<double>(n);
    for (double s : sum_module) rec.module_losses.push_back(s / static_cast<double>(n));
    rec.train_accuracy =
        cfg.log_train_accuracy ? train_accuracy(model, ds, train_indices) : 0.0;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (log_stream) TrainLog::write_csv_row(*log_stream, rec);
    log.epochs.push_back(std::move(rec));
  }

  model.epochs_trained() += static_cast<std::uint32_t>(cfg.epochs);
  return log;
}

EvalResult evaluate(Model& model, const Dataset& ds, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ConfigError("evaluate requested on an empty index set");
  constexpr std::size_t kChunk = 256;
  EvalResult res;
  res.labels.reserve(indices.size());
  res.predictions.reserve(indices.size());
  res.distributions = Tensor({indices.size(), ds.n_class});
  for (std::size_t off = 0; off < indices.size(); off += kChunk) {
    const std::size_t n = std::min(kChunk, indices.size() - off);
    const auto chunk = indices.subspan(off, n);
    PredictResult pr = model.predict(gather_rows(ds, chunk));
    for (std::size_t i = 0; i < n; ++i) {
      res.labels.push_back(ds.labels[chunk[i]]);
      res.predictions.push_back(pr.labels[i]);
      std::copy(pr.distributions.data() + i * ds.n_class,
                pr.distributions.data() + (i + 1) * ds.n_class,
                res.distributions.data() + (off + i) * ds.n_class);
    }
  }
  res.cm = confusion(res.labels, res.predictions, ds.n_class);
  res.metrics = bundle(res.cm);
  return res;
}

void TrainLog::write_csv_header(std::ostream& out, std::size_t n_modules) {
  out << "epoch,total_loss,cls_loss,recon_loss";
  for (std::size_t m = 1; m <= n_modules; ++m) out << ",module" << m << "_loss";
  out << ",train_acc,seconds\n";
}

void TrainLog::write_csv_row(std::ostream& out, const EpochRecord& rec) {
  char buf[64];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.8g", v);
    return std::string(buf);
  };
  out << rec.epoch << "," << fmt(rec.total_loss) << "," << fmt(rec.cls_loss) << ","
      << fmt(rec.recon_loss);
  for (double m : rec.module_losses) out << "," << fmt(m);
  out << "," << fmt(rec.train_accuracy) << "," << fmt(rec.seconds) << "\n";
  out.flush();
}

void TrainLog::write_csv(std::ostream& out, std::size_t n_modules) const {
  write_csv_header(out, n_modules);
  for (const EpochRecord& rec : epochs) write_csv_row(out, rec);
}

}  // namespace grcan
