#pragma once

// Brute-force reference implementations used to check the library. These
// stay deliberately independent of the production code paths: plain loops,
// explicit path walks, no shared kernels.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "grcan/parameter.hpp"
#include "grcan/tensor.hpp"

namespace oracle {

using grcan::Parameter;
using grcan::Tensor;

// y[i,j] = sum_k x[i,k] w[k,j] + b[j], triple loop.
inline Tensor matmul_bias(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t n = x.dim(0), in = x.dim(1), out = w.dim(1);
  Tensor y({n, out});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < out; ++j) {
      double acc = b[j];
      for (std::size_t k = 0; k < in; ++k) acc += x[i * in + k] * w[k * out + j];
      y[i * out + j] = acc;
    }
  }
  return y;
}

// Sliding-window cross-correlation with explicit bounds checks.
inline Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, bool same) {
  const std::size_t n = x.dim(0), cin = x.dim(1), len = x.dim(2);
  const std::size_t cout = w.dim(0), k = w.dim(2);
  const std::size_t out_len = same ? len : len - k + 1;
  const long pad = same ? static_cast<long>((k - 1) / 2) : 0;
  Tensor y({n, cout, out_len});
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t co = 0; co < cout; ++co) {
      for (std::size_t i = 0; i < out_len; ++i) {
        double acc = b[co];
        for (std::size_t ci = 0; ci < cin; ++ci) {
          for (std::size_t kk = 0; kk < k; ++kk) {
            const long xi = static_cast<long>(i + kk) - pad;
            if (xi < 0 || xi >= static_cast<long>(len)) continue;
            acc += x[(s * cin + ci) * len + static_cast<std::size_t>(xi)] *
                   w[(co * cin + ci) * k + kk];
          }
        }
        y[(s * cout + co) * out_len + i] = acc;
      }
    }
  }
  return y;
}

inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, bool same) {
  const std::size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const std::size_t oh = same ? h : h - kh + 1;
  const std::size_t ow = same ? wd : wd - kw + 1;
  const long ph = same ? static_cast<long>((kh - 1) / 2) : 0;
  const long pw = same ? static_cast<long>((kw - 1) / 2) : 0;
  Tensor y({n, cout, oh, ow});
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t r = 0; r < oh; ++r)
        for (std::size_t c = 0; c < ow; ++c) {
          double acc = b[co];
          for (std::size_t ci = 0; ci < cin; ++ci)
            for (std::size_t ki = 0; ki < kh; ++ki)
              for (std::size_t kj = 0; kj < kw; ++kj) {
                const long xr = static_cast<long>(r + ki) - ph;
                const long xc = static_cast<long>(c + kj) - pw;
                if (xr < 0 || xr >= static_cast<long>(h) || xc < 0 ||
                    xc >= static_cast<long>(wd))
                  continue;
                acc += x[((s * cin + ci) * h + static_cast<std::size_t>(xr)) * wd +
                         static_cast<std::size_t>(xc)] *
                       w[((co * cin + ci) * kh + ki) * kw + kj];
              }
          y[((s * cout + co) * oh + r) * ow + c] = acc;
        }
  return y;
}

// Exhaustive window max, ceil mode.
inline Tensor maxpool1d(const Tensor& x, std::size_t window) {
  const std::size_t n = x.dim(0), ch = x.dim(1), len = x.dim(2);
  const std::size_t out = (len + window - 1) / window;
  Tensor y({n, ch, out});
  for (std::size_t nc = 0; nc < n * ch; ++nc)
    for (std::size_t i = 0; i < out; ++i) {
      double best = -1e300;
      for (std::size_t j = i * window; j < std::min(len, (i + 1) * window); ++j)
        best = std::max(best, x[nc * len + j]);
      y[nc * out + i] = best;
    }
  return y;
}

inline Tensor maxpool2d(const Tensor& x, std::size_t window) {
  const std::size_t n = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = (h + window - 1) / window, ow = (w + window - 1) / window;
  Tensor y({n, ch, oh, ow});
  for (std::size_t nc = 0; nc < n * ch; ++nc)
    for (std::size_t r = 0; r < oh; ++r)
      for (std::size_t c = 0; c < ow; ++c) {
        double best = -1e300;
        for (std::size_t rr = r * window; rr < std::min(h, (r + 1) * window); ++rr)
          for (std::size_t cc = c * window; cc < std::min(w, (c + 1) * window); ++cc)
            best = std::max(best, x[(nc * h + rr) * w + cc]);
        y[(nc * oh + r) * ow + c] = best;
      }
  return y;
}

// Leaf reach probability by walking every root-to-leaf path bit by bit,
// independent of the production recursion. Bit 0 = left.
inline std::vector<double> leaf_paths(std::span<const double> decisions, std::size_t depth) {
  const std::size_t n_leaf = std::size_t{1} << (depth + 1);
  std::vector<double> q(n_leaf);
  for (std::size_t l = 0; l < n_leaf; ++l) {
    double prob = 1.0;
    std::size_t idx = 0;
    for (std::size_t level = 0; level <= depth; ++level) {
      const std::size_t bit = (l >> (depth - level)) & 1;
      prob *= bit == 0 ? decisions[idx] : 1.0 - decisions[idx];
      idx = 2 * idx + 1 + bit;
    }
    q[l] = prob;
  }
  return q;
}

// Central finite differences for every entry of every listed parameter.
// loss_fn must run a fresh forward and return the scalar loss;
// backward_fn must run one forward+backward, leaving grads accumulated.
// Returns the worst relative error; entries where both the analytic and
// numeric gradients are below 1e-7 are treated as matching.
inline double fd_max_rel_error(std::span<Parameter* const> params,
                               const std::function<double()>& loss_fn,
                               const std::function<void()>& backward_fn, double h = 1e-5) {
  for (Parameter* p : params) p->zero_grad();
  backward_fn();
  std::vector<std::vector<double>> grads;
  for (Parameter* p : params) grads.push_back(p->grad.values());

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter* p = params[pi];
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + h;
      const double lp = loss_fn();
      p->value[i] = orig - h;
      const double lm = loss_fn();
      p->value[i] = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = grads[pi][i];
      const double scale = std::max(std::abs(fd), std::abs(an));
      if (scale < 1e-7) continue;
      worst = std::max(worst, std::abs(fd - an) / scale);
    }
  }
  for (Parameter* p : params) p->zero_grad();
  return worst;
}

inline Tensor random_tensor(std::vector<std::size_t> shape, grcan::Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform_in(lo, hi);
  return t;
}

}  // namespace oracle
