#include "grcan/pipeline.hpp"

#include <string>

#include "grcan/errors.hpp"

namespace grcan {

std::size_t PipelineConfig::input_size() const { return shape_product(input_shape); }

void PipelineConfig::validate() const {
  if (input_shape.size() != 1 && input_shape.size() != 2) {
    throw ConfigError("pipeline input shape must be {length} or {height, width}");
  }
  for (std::size_t d : input_shape) {
    if (d == 0) throw ConfigError("pipeline input extents must be positive");
  }
  if (ae_layers < 1 || ae_layers > 3) {
    throw ConfigError("ae_layers must be in [1, 3], got " + std::to_string(ae_layers));
  }
  if (ae_channels.size() != ae_layers) {
    throw ConfigError("ae_channels must list one channel count per autoencoder layer");
  }
  for (std::size_t c : ae_channels) {
    if (c == 0) throw ConfigError("ae_channels entries must be positive");
  }
  if (kernel == 0) throw ConfigError("kernel must be >= 1");
  if (fc_layers > 2) {
    throw ConfigError("fc_layers must be in [0, 2], got " + std::to_string(fc_layers));
  }
  if (fc_widths.size() != fc_layers) {
    throw ConfigError("fc_widths must list one width per fully connected layer");
  }
  for (std::size_t w : fc_widths) {
    if (w == 0) throw ConfigError("fc_widths entries must be positive");
  }
}

PipelineState::PipelineState(PipelineConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const bool two_d = cfg_.is_2d();
  const std::size_t k = cfg_.kernel;

  std::vector<std::size_t> extents = cfg_.input_shape;  // current spatial extents
  std::size_t channels = 1;
  for (std::size_t i = 0; i < cfg_.ae_layers; ++i) {
    const std::size_t out_ch = cfg_.ae_channels[i];
    const std::size_t fan_in = channels * k * (two_d ? k : 1);
    std::vector<std::size_t> wshape =
        two_d ? std::vector<std::size_t>{out_ch, channels, k, k}
              : std::vector<std::size_t>{out_ch, channels, k};
    enc_w_.push_back(Parameter::uniform_init("enc" + std::to_string(i) + "/w", wshape, fan_in, rng));
    enc_b_.push_back(Parameter::zeros_init("enc" + std::to_string(i) + "/b", {out_ch}));

    LayerSpec spec;
    spec.kind = two_d ? LayerKind::Conv2d : LayerKind::Conv1d;
    spec.in_channels = channels;
    spec.out_channels = out_ch;
    spec.kernel = k;
    spec.window = kPoolWindow;
    spec.activation = cfg_.activation;
    specs_.push_back(spec);

    pre_pool_.push_back(extents);
    for (std::size_t& e : extents) e = pool_out_len(e, kPoolWindow);
    channels = out_ch;
  }

  hidden_shape_ = {channels};
  hidden_shape_.insert(hidden_shape_.end(), extents.begin(), extents.end());

  // Decoder unwinds the stages in reverse; stage i maps channel count
  // ae_channels[i] back to the count entering encoder stage i.
  for (std::size_t i = cfg_.ae_layers; i-- > 0;) {
    const std::size_t in_ch = cfg_.ae_channels[i];
    const std::size_t out_ch = i == 0 ? 1 : cfg_.ae_channels[i - 1];
    const std::size_t fan_in = in_ch * k * (two_d ? k : 1);
    std::vector<std::size_t> wshape =
        two_d ? std::vector<std::size_t>{out_ch, in_ch, k, k}
              : std::vector<std::size_t>{out_ch, in_ch, k};
    dec_w_.push_back(Parameter::uniform_init("dec" + std::to_string(i) + "/w", wshape, fan_in, rng));
    dec_b_.push_back(Parameter::zeros_init("dec" + std::to_string(i) + "/b", {out_ch}));

    LayerSpec spec;
    spec.kind = two_d ? LayerKind::Conv2d : LayerKind::Conv1d;
    spec.in_channels = in_ch;
    spec.out_channels = out_ch;
    spec.kernel = k;
    spec.window = kPoolWindow;
    spec.activation = cfg_.activation;
    specs_.push_back(spec);
  }

  std::size_t width = hidden_size();
  for (std::size_t j = 0; j < cfg_.fc_layers; ++j) {
    const std::size_t out = cfg_.fc_widths[j];
    fc_w_.push_back(Parameter::uniform_init("fc" + std::to_string(j) + "/w", {width, out}, width,
                                            rng));
    fc_b_.push_back(Parameter::zeros_init("fc" + std::to_string(j) + "/b", {out}));

    LayerSpec spec;
    spec.kind = LayerKind::Dense;
    spec.fan_in = width;
    spec.fan_out = out;
    spec.activation = cfg_.activation;
    specs_.push_back(spec);
    width = out;
  }
}

std::size_t PipelineState::hidden_size() const { return shape_product(hidden_shape_); }

std::size_t PipelineState::fc_out_width() const {
  return cfg_.fc_layers == 0 ? hidden_size() : cfg_.fc_widths.back();
}

Node* PipelineState::build_encoder(Graph& g, Node* x) {
  const bool two_d = cfg_.is_2d();
  const std::size_t batch = x->value.dim(0);
  {
    std::vector<std::size_t> want{batch};
    want.insert(want.end(), cfg_.input_shape.begin(), cfg_.input_shape.end());
    if (x->value.shape() != want) {
      throw DimensionError("encoder input " + shape_to_string(x->value.shape()) +
                           ", configured for " + shape_to_string(want));
    }
  }
  std::vector<std::size_t> with_ch{batch, 1};
  with_ch.insert(with_ch.end(), cfg_.input_shape.begin(), cfg_.input_shape.end());
  Node* h = g.reshape(x, with_ch);
  for (std::size_t i = 0; i < cfg_.ae_layers; ++i) {
    h = two_d ? g.conv2d(h, g.param(enc_w_[i]), g.param(enc_b_[i]), Padding::Same)
              : g.conv1d(h, g.param(enc_w_[i]), g.param(enc_b_[i]), Padding::Same);
    h = g.activation(h, cfg_.activation);
    h = two_d ? g.maxpool2d(h, kPoolWindow) : g.maxpool1d(h, kPoolWindow);
  }
  return h;
}

Node* PipelineState::build_decoder(Graph& g, Node* h) {
  const bool two_d = cfg_.is_2d();
  {
    std::vector<std::size_t> want{h->value.dim(0)};
    want.insert(want.end(), hidden_shape_.begin(), hidden_shape_.end());
    if (h->value.shape() != want) {
      throw DimensionError("decoder input " + shape_to_string(h->value.shape()) +
                           ", expected hidden code " + shape_to_string(want));
    }
  }
  Node* y = h;
  for (std::size_t j = 0; j < cfg_.ae_layers; ++j) {
    const std::size_t stage = cfg_.ae_layers - 1 - j;  // encoder stage being undone
    const auto& target = pre_pool_[stage];
    y = two_d ? g.upsample2d(y, kPoolWindow, target[0], target[1])
              : g.upsample1d(y, kPoolWindow, target[0]);
    y = two_d ? g.conv2d(y, g.param(dec_w_[j]), g.param(dec_b_[j]), Padding::Same)
              : g.conv1d(y, g.param(dec_w_[j]), g.param(dec_b_[j]), Padding::Same);
    y = g.activation(y, cfg_.activation);
  }
  return y;
}

Node* PipelineState::build_fc(Graph& g, Node* h) {
  const std::size_t batch = h->value.dim(0);
  Node* f = g.reshape(h, {batch, hidden_size()});
  for (std::size_t j = 0; j < cfg_.fc_layers; ++j) {
    f = g.dense(f, g.param(fc_w_[j]), g.param(fc_b_[j]));
    f = g.activation(f, cfg_.activation);
  }
  return f;
}

Tensor PipelineState::encode(const Tensor& x) {
  Graph g;
  return build_encoder(g, g.input(x))->value;
}

Tensor PipelineState::decode(const Tensor& h) {
  Graph g;
  return build_decoder(g, g.input(h))->value;
}

Tensor PipelineState::fc_forward(const Tensor& h) {
  Graph g;
  return build_fc(g, g.input(h))->value;
}

std::vector<Parameter*> PipelineState::params() {
  std::vector<Parameter*> out;
  auto push = [&out](std::vector<Parameter>& v) {
    for (Parameter& p : v) out.push_back(&p);
  };
  push(enc_w_);
  push(enc_b_);
  push(dec_w_);
  push(dec_b_);
  push(fc_w_);
  push(fc_b_);
  return out;
}

double reconstruction_loss(const Tensor& x, const Tensor& x_rec) {
  if (shape_product(x.shape()) != shape_product(x_rec.shape()) ||
      x.dim(0) != x_rec.dim(0)) {
    throw DimensionError("reconstruction_loss: " + shape_to_string(x.shape()) + " vs " +
                         shape_to_string(x_rec.shape()));
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - x_rec[i];
    loss += d * d;
  }
  return loss / static_cast<double>(x.dim(0));
}

}  // namespace grcan
