#include "grcan/layers.hpp"

#include <algorithm>
#include <cmath>

#include "grcan/errors.hpp"

namespace grcan {

Activation activation_from_string(const std::string& name) {
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "relu") return Activation::Relu;
  if (name == "leaky_relu") return Activation::LeakyRelu;
  if (name == "relu6") return Activation::Relu6;
  if (name == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + name +
                    "' (expected sigmoid|relu|leaky_relu|relu6|tanh)");
}

std::string activation_name(Activation kind) {
  switch (kind) {
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Relu: return "relu";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Relu6: return "relu6";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

double activation_scalar(Activation kind, double x) {
  switch (kind) {
    case Activation::Sigmoid: return sigmoid(x);
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::LeakyRelu: return x > 0.0 ? x : kLeakyReluSlope * x;
    case Activation::Relu6: return x <= 0.0 ? 0.0 : (x >= kRelu6Cap ? kRelu6Cap : x);
    case Activation::Tanh: return std::tanh(x);
  }
  return x;
}

double activation_deriv(Activation kind, double x, double y) {
  switch (kind) {
    case Activation::Sigmoid: return y * (1.0 - y);
    case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::LeakyRelu: return x > 0.0 ? 1.0 : kLeakyReluSlope;
    case Activation::Relu6: return (x > 0.0 && x < kRelu6Cap) ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - y * y;
  }
  return 1.0;
}

std::size_t conv_out_len(std::size_t in_len, std::size_t kernel, Padding pad) {
  if (pad == Padding::Same) return in_len;
  if (in_len < kernel) {
    throw DimensionError("conv kernel " + std::to_string(kernel) + " larger than input extent " +
                         std::to_string(in_len));
  }
  return in_len - kernel + 1;
}

std::size_t pool_out_len(std::size_t in_len, std::size_t window) {
  return (in_len + window - 1) / window;
}

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.ndim() != 2 || w.ndim() != 2 || x.dim(1) != w.dim(0)) {
    throw DimensionError("dense: input " + shape_to_string(x.shape()) +
                         " incompatible with weights " + shape_to_string(w.shape()));
  }
  const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(1);
  if (b.size() != out) {
    throw DimensionError("dense: bias " + shape_to_string(b.shape()) + " expects " +
                         std::to_string(out) + " entries");
  }
  Tensor y({batch, out});
  for (std::size_t r = 0; r < batch; ++r) {
    const double* xr = x.data() + r * in;
    double* yr = y.data() + r * out;
    for (std::size_t j = 0; j < out; ++j) yr[j] = b[j];
    for (std::size_t k = 0; k < in; ++k) {
      const double xv = xr[k];
      const double* wk = w.data() + k * out;
      for (std::size_t j = 0; j < out; ++j) yr[j] += xv * wk[j];
    }
  }
  return y;
}

void dense_backward(const Tensor& x, const Tensor& w, const Tensor& gout, Tensor& gx, Tensor& gw,
                    Tensor& gb) {
  const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(1);
  for (std::size_t r = 0; r < batch; ++r) {
    const double* xr = x.data() + r * in;
    const double* gr = gout.data() + r * out;
    double* gxr = gx.data() + r * in;
    for (std::size_t j = 0; j < out; ++j) gb[j] += gr[j];
    for (std::size_t k = 0; k < in; ++k) {
      const double* wk = w.data() + k * out;
      double* gwk = gw.data() + k * out;
      double acc = 0.0;
      for (std::size_t j = 0; j < out; ++j) {
        acc += gr[j] * wk[j];
        gwk[j] += gr[j] * xr[k];
      }
      gxr[k] += acc;
    }
  }
}

Tensor conv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Padding pad) {
  if (x.ndim() != 3 || w.ndim() != 3 || x.dim(1) != w.dim(1)) {
    throw DimensionError("conv1d: input " + shape_to_string(x.shape()) +
                         " incompatible with kernel " + shape_to_string(w.shape()));
  }
  const std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
  const std::size_t cout = w.dim(0), k = w.dim(2);
  const std::size_t out_len = conv_out_len(len, k, pad);
  const std::ptrdiff_t shift = pad == Padding::Same ? static_cast<std::ptrdiff_t>((k - 1) / 2) : 0;

  Tensor y({batch, cout, out_len});
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t co = 0; co < cout; ++co) {
      double* yr = y.data() + (n * cout + co) * out_len;
      for (std::size_t i = 0; i < out_len; ++i) yr[i] = b[co];
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const double* xr = x.data() + (n * cin + ci) * len;
        const double* wr = w.data() + (co * cin + ci) * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
          const double wv = wr[kk];
          const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kk) - shift;
          const std::size_t lo = off < 0 ? static_cast<std::size_t>(-off) : 0;
          const std::size_t hi =
              std::min(out_len, off >= static_cast<std::ptrdiff_t>(len)
                                    ? static_cast<std::size_t>(0)
                                    : len - static_cast<std::size_t>(off));
          for (std::size_t i = lo; i < hi; ++i) yr[i] += wv * xr[i + static_cast<std::size_t>(off)];
        }
      }
    }
  }
  return y;
}

void conv1d_backward(const Tensor& x, const Tensor& w, const Tensor& gout, Padding pad, Tensor& gx,
                     Tensor& gw, Tensor& gb) {
  const std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
  const std::size_t cout = w.dim(0), k = w.dim(2);
  const std::size_t out_len = gout.dim(2);
  const std::ptrdiff_t shift = pad == Padding::Same ? static_cast<std::ptrdiff_t>((k - 1) / 2) : 0;

  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t co = 0; co < cout; ++co) {
      const double* gr = gout.data() + (n * cout + co) * out_len;
      for (std::size_t i = 0; i < out_len; ++i) gb[co] += gr[i];
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const double* xr = x.data() + (n * cin + ci) * len;
        double* gxr = gx.data() + (n * cin + ci) * len;
        const double* wr = w.data() + (co * cin + ci) * k;
        double* gwr = gw.data() + (co * cin + ci) * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
          const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kk) - shift;
          const std::size_t lo = off < 0 ? static_cast<std::size_t>(-off) : 0;
          const std::size_t hi =
              std::min(out_len, off >= static_cast<std::ptrdiff_t>(len)
                                    ? static_cast<std::size_t>(0)
                                    : len - static_cast<std::size_t>(off));
          double acc = 0.0;
          const double wv = wr[kk];
          for (std::size_t i = lo; i < hi; ++i) {
            const std::size_t xi = i + static_cast<std::size_t>(off);
            acc += gr[i] * xr[xi];
            gxr[xi] += gr[i] * wv;
          }
          gwr[kk] += acc;
        }
      }
    }
  }
}

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Padding pad) {
  if (x.ndim() != 4 || w.ndim() != 4 || x.dim(1) != w.dim(1)) {
    throw DimensionError("conv2d: input " + shape_to_string(x.shape()) +
                         " incompatible with kernel " + shape_to_string(w.shape()));
  }
  const std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const std::size_t oh = conv_out_len(h, kh, pad), ow = conv_out_len(wd, kw, pad);
  const std::ptrdiff_t sh = pad == Padding::Same ? static_cast<std::ptrdiff_t>((kh - 1) / 2) : 0;
  const std::ptrdiff_t sw = pad == Padding::Same ? static_cast<std::ptrdiff_t>((kw - 1) / 2) : 0;

  Tensor y({batch, cout, oh, ow});
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t co = 0; co < cout; ++co) {
      double* yp = y.data() + ((n * cout + co) * oh) * ow;
      for (std::size_t i = 0; i < oh * ow; ++i) yp[i] = b[co];
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const double* xp = x.data() + ((n * cin + ci) * h) * wd;
        const double* wp = w.data() + ((co * cin + ci) * kh) * kw;
        for (std::size_t ki = 0; ki < kh; ++ki) {
          const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(ki) - sh;
          const std::size_t rlo = oy < 0 ? static_cast<std::size_t>(-oy) : 0;
          const std::size_t rhi =
              std::min(oh, oy >= static_cast<std::ptrdiff_t>(h) ? static_cast<std::size_t>(0)
                                                                : h - static_cast<std::size_t>(oy));
          for (std::size_t kj = 0; kj < kw; ++kj) {
            const double wv = wp[ki * kw + kj];
            const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(kj) - sw;
            const std::size_t clo = ox < 0 ? static_cast<std::size_t>(-ox) : 0;
            const std::size_t chi =
                std::min(ow, ox >= static_cast<std::ptrdiff_t>(wd)
                                 ? static_cast<std::size_t>(0)
                                 : wd - static_cast<std::size_t>(ox));
            for (std::size_t r = rlo; r < rhi; ++r) {
              const double* xrow = xp + (r + static_cast<std::size_t>(oy)) * wd;
              double* yrow = yp + r * ow;
              for (std::size_t c = clo; c < chi; ++c) {
                yrow[c] += wv * xrow[c + static_cast<std::size_t>(ox)];
              }
            }
          }
        }
      }
    }
  }
  return y;
}

void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& gout, Padding pad, Tensor& gx,
                     Tensor& gw, Tensor& gb) {
  const std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const std::size_t oh = gout.dim(2), ow = gout.dim(3);
  const std::ptrdiff_t sh = pad == Padding::Same ? static_cast<std::ptrdiff_t>((kh - 1) / 2) : 0;
  const std::ptrdiff_t sw = pad == Padding::Same ? static_cast<std::ptrdiff_t>((kw - 1) / 2) : 0;

  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t co = 0; co < cout; ++co) {
      const double* gp = gout.data() + ((n * cout + co) * oh) * ow;
      for (std::size_t i = 0; i < oh * ow; ++i) gb[co] += gp[i];
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const double* xp = x.data() + ((n * cin + ci) * h) * wd;
        double* gxp = gx.data() + ((n * cin + ci) * h) * wd;
        const double* wp = w.data() + ((co * cin + ci) * kh) * kw;
        double* gwp = gw.data() + ((co * cin + ci) * kh) * kw;
        for (std::size_t ki = 0; ki < kh; ++ki) {
          const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(ki) - sh;
          const std::size_t rlo = oy < 0 ? static_cast<std::size_t>(-oy) : 0;
          const std::size_t rhi =
              std::min(oh, oy >= static_cast<std::ptrdiff_t>(h) ? static_cast<std::size_t>(0)
                                                                : h - static_cast<std::size_t>(oy));
          for (std::size_t kj = 0; kj < kw; ++kj) {
            const double wv = wp[ki * kw + kj];
            double acc = 0.0;
            const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(kj) - sw;
            const std::size_t clo = ox < 0 ? static_cast<std::size_t>(-ox) : 0;
            const std::size_t chi =
                std::min(ow, ox >= static_cast<std::ptrdiff_t>(wd)
                                 ? static_cast<std::size_t>(0)
                                 : wd - static_cast<std::size_t>(ox));
            for (std::size_t r = rlo; r < rhi; ++r) {
              const double* xrow = xp + (r + static_cast<std::size_t>(oy)) * wd;
              double* gxrow = gxp + (r + static_cast<std::size_t>(oy)) * wd;
              const double* grow = gp + r * ow;
              for (std::size_t c = clo; c < chi; ++c) {
                acc += grow[c] * xrow[c + static_cast<std::size_t>(ox)];
                gxrow[c + static_cast<std::size_t>(ox)] += grow[c] * wv;
              }
            }
            gwp[ki * kw + kj] += acc;
          }
        }
      }
    }
  }
}

PoolResult maxpool1d_forward(const Tensor& x, std::size_t window) {
  if (window == 0) throw ParameterError("maxpool: window must be >= 1");
  if (x.ndim() != 3) {
    throw DimensionError("maxpool1d expects [batch, channels, length], got " +
                         shape_to_string(x.shape()));
  }
  const std::size_t batch = x.dim(0), ch = x.dim(1), len = x.dim(2);
  const std::size_t out_len = pool_out_len(len, window);
  PoolResult r{Tensor({batch, ch, out_len}), std::vector<std::size_t>(batch * ch * out_len)};
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < ch; ++c) {
      const std::size_t base = (n * ch + c) * len;
      double* yr = r.out.data() + (n * ch + c) * out_len;
      std::size_t* ar = r.argmax.data() + (n * ch + c) * out_len;
      for (std::size_t i = 0; i < out_len; ++i) {
        const std::size_t lo = i * window, hi = std::min(len, lo + window);
        std::size_t best = lo;
        for (std::size_t j = lo + 1; j < hi; ++j) {
          if (x[base + j] > x[base + best]) best = j;
        }
        yr[i] = x[base + best];
        ar[i] = base + best;
      }
    }
  }
  return r;
}

PoolResult maxpool2d_forward(const Tensor& x, std::size_t window) {
  if (window == 0) throw ParameterError("maxpool: window must be >= 1");
  if (x.ndim() != 4) {
    throw DimensionError("maxpool2d expects [batch, channels, h, w], got " +
                         shape_to_string(x.shape()));
  }
  const std::size_t batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = pool_out_len(h, window), ow = pool_out_len(w, window);
  PoolResult r{Tensor({batch, ch, oh, ow}), std::vector<std::size_t>(batch * ch * oh * ow)};
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < ch; ++c) {
      const std::size_t base = ((n * ch + c) * h) * w;
      double* yp = r.out.data() + ((n * ch + c) * oh) * ow;
      std::size_t* ap = r.argmax.data() + ((n * ch + c) * oh) * ow;
      for (std::size_t i = 0; i < oh; ++i) {
        const std::size_t rlo = i * window, rhi = std::min(h, rlo + window);
        for (std::size_t j = 0; j < ow; ++j) {
          const std::size_t clo = j * window, chi = std::min(w, clo + window);
          std::size_t best = base + rlo * w + clo;
          for (std::size_t rr = rlo; rr < rhi; ++rr) {
            for (std::size_t cc = clo; cc < chi; ++cc) {
              const std::size_t idx = base + rr * w + cc;
              if (x[idx] > x[best]) best = idx;
            }
          }
          yp[i * ow + j] = x[best];
          ap[i * ow + j] = best;
        }
      }
    }
  }
  return r;
}

void maxpool_backward(const std::vector<std::size_t>& argmax, const Tensor& gout, Tensor& gx) {
  for (std::size_t i = 0; i < argmax.size(); ++i) gx[argmax[i]] += gout[i];
}

Tensor upsample1d_forward(const Tensor& x, std::size_t factor, std::size_t out_len) {
  if (factor == 0) throw ParameterError("upsample: factor must be >= 1");
  const std::size_t batch = x.dim(0), ch = x.dim(1), len = x.dim(2);
  if (out_len > len * factor) {
    throw DimensionError("upsample1d: requested length " + std::to_string(out_len) +
                         " exceeds " + std::to_string(len * factor));
  }
  Tensor y({batch, ch, out_len});
  for (std::size_t nc = 0; nc < batch * ch; ++nc) {
    const double* xr = x.data() + nc * len;
    double* yr = y.data() + nc * out_len;
    for (std::size_t i = 0; i < out_len; ++i) yr[i] = xr[i / factor];
  }
  return y;
}

void upsample1d_backward(const Tensor& gout, std::size_t factor, Tensor& gx) {
  const std::size_t batch = gx.dim(0), ch = gx.dim(1), len = gx.dim(2);
  const std::size_t out_len = gout.dim(2);
  for (std::size_t nc = 0; nc < batch * ch; ++nc) {
    const double* gr = gout.data() + nc * out_len;
    double* gxr = gx.data() + nc * len;
    for (std::size_t i = 0; i < out_len; ++i) gxr[i / factor] += gr[i];
  }
}

Tensor upsample2d_forward(const Tensor& x, std::size_t factor, std::size_t out_h,
                          std::size_t out_w) {
  if (factor == 0) throw ParameterError("upsample: factor must be >= 1");
  const std::size_t batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (out_h > h * factor || out_w > w * factor) {
    throw DimensionError("upsample2d: requested extent exceeds input * factor");
  }
  Tensor y({batch, ch, out_h, out_w});
  for (std::size_t nc = 0; nc < batch * ch; ++nc) {
    const double* xp = x.data() + nc * h * w;
    double* yp = y.data() + nc * out_h * out_w;
    for (std::size_t i = 0; i < out_h; ++i) {
      const double* xrow = xp + (i / factor) * w;
      double* yrow = yp + i * out_w;
      for (std::size_t j = 0; j < out_w; ++j) yrow[j] = xrow[j / factor];
    }
  }
  return y;
}

void upsample2d_backward(const Tensor& gout, std::size_t factor, Tensor& gx) {
  const std::size_t batch = gx.dim(0), ch = gx.dim(1), h = gx.dim(2), w = gx.dim(3);
  const std::size_t oh = gout.dim(2), ow = gout.dim(3);
  for (std::size_t nc = 0; nc < batch * ch; ++nc) {
    const double* gp = gout.data() + nc * oh * ow;
    double* gxp = gx.data() + nc * h * w;
    for (std::size_t i = 0; i < oh; ++i) {
      double* gxrow = gxp + (i / factor) * w;
      const double* grow = gp + i * ow;
      for (std::size_t j = 0; j < ow; ++j) gxrow[j / factor] += grow[j];
    }
  }
}

Tensor activation_apply(const Tensor& x, Activation kind) {
  Tensor y(x.shape());
  const double* xp = x.data();
  double* yp = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) yp[i] = activation_scalar(kind, xp[i]);
  return y;
}

}  // namespace grcan
