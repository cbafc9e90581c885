#pragma once

#include <cstddef>
#include <vector>

#include "grcan/autograd.hpp"
#include "grcan/layers.hpp"
#include "grcan/parameter.hpp"
#include "grcan/rng.hpp"
#include "grcan/tensor.hpp"

namespace grcan {

// Architecture of the shared input-processing trunk: a convolutional
// autoencoder (1d or 2d picked by the input shape) followed by fully
// connected layers that produce the forest input.
struct PipelineConfig {
  std::vector<std::size_t> input_shape;  // {D} for vectors, {H, W} for images
  std::size_t ae_layers = 2;             // 1..3 conv+pool stages
  std::vector<std::size_t> ae_channels;  // per stage; defaults to 8 each
  std::size_t kernel = 3;
  std::size_t fc_layers = 1;  // 0..2; 0 feeds the flattened code straight through
  std::vector<std::size_t> fc_widths;
  Activation activation = Activation::Sigmoid;

  bool is_2d() const { return input_shape.size() == 2; }
  std::size_t input_size() const;
  void validate() const;  // throws ConfigError
};

// Parameters and shape bookkeeping for one pipeline instance. Encoder
// stages are conv(same) -> activation -> maxpool(2); decoder stages mirror
// them as upsample(2, cropped to the recorded pre-pool extent) -> conv
// (same) -> activation, so the reconstruction always matches the input
// shape exactly.
class PipelineState {
public:
  PipelineState(PipelineConfig cfg, Rng& rng);

  const PipelineConfig& config() const { return cfg_; }

  // Width of the forest input produced by fc_forward.
  std::size_t fc_out_width() const;
  std::size_t hidden_size() const;
  const std::vector<std::size_t>& hidden_shape() const { return hidden_shape_; }

  // Graph builders (training and batched inference share them).
  // x: [B, D] or [B, H, W] -> hidden code [B, C, ...]
  Node* build_encoder(Graph& g, Node* x);
  // hidden code -> reconstruction [B, 1, ...] matching the input extents
  Node* build_decoder(Graph& g, Node* h);
  // hidden code -> forest input [B, fc_out_width]
  Node* build_fc(Graph& g, Node* h);

  // Forward-only convenience wrappers over the builders.
  Tensor encode(const Tensor& x);
  Tensor decode(const Tensor& h);
  Tensor fc_forward(const Tensor& h);

  std::vector<Parameter*> params();
  const std::vector<LayerSpec>& layer_specs() const { return specs_; }

private:
  PipelineConfig cfg_;
  std::vector<Parameter> enc_w_, enc_b_, dec_w_, dec_b_, fc_w_, fc_b_;
  // Spatial extents entering each pool stage, per dimension; the decoder
  // crops its upsampled maps back to these.
  std::vector<std::vector<std::size_t>> pre_pool_;
  std::vector<std::size_t> hidden_shape_;  // without the batch extent
  std::vector<LayerSpec> specs_;
};

// Sum of squared differences, averaged over the leading (batch) extent.
double reconstruction_loss(const Tensor& x, const Tensor& x_rec);

constexpr std::size_t kPoolWindow = 2;

}  // namespace grcan
