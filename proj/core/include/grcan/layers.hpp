#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "grcan/tensor.hpp"

namespace grcan {

enum class Activation { Sigmoid, Relu, LeakyRelu, Relu6, Tanh };

constexpr double kLeakyReluSlope = 0.01;
constexpr double kRelu6Cap = 6.0;

Activation activation_from_string(const std::string& name);
std::string activation_name(Activation kind);

double activation_scalar(Activation kind, double x);
// Derivative given both the input and the already-computed output; the
// smooth kinds use the output, the relu family the input sign.
double activation_deriv(Activation kind, double x, double y);

double sigmoid(double z);

enum class Padding { Same, Valid };

enum class LayerKind { Dense, Conv1d, Conv2d, MaxPool, Upsample, ActivationOnly };

// Descriptive record of one layer; the pipeline keeps one per stage so the
// architecture can be reported without re-deriving it from tensor shapes.
struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 1;
  std::size_t window = 1;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  Activation activation = Activation::Sigmoid;
};

// ---- forward kernels --------------------------------------------------
// Shared by the autograd graph and plain inference; each has a matching
// backward below that accumulates into the gradient buffers.

// x [B, I] * w [I, O] + b [O] -> [B, O]
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b);

// x [B, C, L], w [CO, CI, K], b [CO]; stride 1 cross-correlation.
Tensor conv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Padding pad);

// x [B, C, H, W], w [CO, CI, KH, KW], b [CO].
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Padding pad);

struct PoolResult {
  Tensor out;
  std::vector<std::size_t> argmax;  // flat input index chosen per output cell
};

// Non-overlapping max pooling, stride == window, trailing partial window
// kept (ceil mode) so no sample column is dropped.
PoolResult maxpool1d_forward(const Tensor& x, std::size_t window);
PoolResult maxpool2d_forward(const Tensor& x, std::size_t window);

// Nearest-neighbour upsampling by an integer factor, cropped to out_len so
// a decoder stage can reproduce the exact pre-pool extent.
Tensor upsample1d_forward(const Tensor& x, std::size_t factor, std::size_t out_len);
Tensor upsample2d_forward(const Tensor& x, std::size_t factor, std::size_t out_h,
                          std::size_t out_w);

Tensor activation_apply(const Tensor& x, Activation kind);

// ---- backward kernels --------------------------------------------------

void dense_backward(const Tensor& x, const Tensor& w, const Tensor& gout, Tensor& gx, Tensor& gw,
                    Tensor& gb);
void conv1d_backward(const Tensor& x, const Tensor& w, const Tensor& gout, Padding pad, Tensor& gx,
                     Tensor& gw, Tensor& gb);
void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& gout, Padding pad, Tensor& gx,
                     Tensor& gw, Tensor& gb);
void maxpool_backward(const std::vector<std::size_t>& argmax, const Tensor& gout, Tensor& gx);
void upsample1d_backward(const Tensor& gout, std::size_t factor, Tensor& gx);
void upsample2d_backward(const Tensor& gout, std::size_t factor, Tensor& gx);

std::size_t conv_out_len(std::size_t in_len, std::size_t kernel, Padding pad);
std::size_t pool_out_len(std::size_t in_len, std::size_t window);

}  // namespace grcan
