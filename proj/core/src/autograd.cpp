#include "grcan/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "grcan/errors.hpp"

namespace grcan {

Node* Graph::make(Tensor value, std::vector<Node*> parents, std::function<void(Node&)> fn) {
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.backward_fn = std::move(fn);
  for (const Node* p : n.parents) {
    if (p->requires_grad) {
      n.requires_grad = true;
      break;
    }
  }
  nodes_.push_back(std::move(n));
  return &nodes_.back();
}

bool Graph::owns(const Node* n) const {
  for (const Node& cand : nodes_) {
    if (&cand == n) return true;
  }
  return false;
}

Node* Graph::input(Tensor v) { return make(std::move(v), {}, nullptr); }

Node* Graph::param(Parameter& p) {
  Node* n = make(p.value, {}, [&p](Node& self) {
    double* dst = p.grad.data();
    const double* src = self.grad.data();
    for (std::size_t i = 0; i < p.grad.size(); ++i) dst[i] += src[i];
    p.grad_ready = true;
  });
  n->requires_grad = true;
  return n;
}

Node* Graph::dense(Node* x, Node* w, Node* b) {
  Tensor y = dense_forward(x->value, w->value, b->value);
  return make(std::move(y), {x, w, b}, [](Node& self) {
    Node *x = self.parents[0], *w = self.parents[1], *b = self.parents[2];
    dense_backward(x->value, w->value, self.grad, x->ensure_grad(), w->ensure_grad(),
                   b->ensure_grad());
  });
}

Node* Graph::matmul(Node* a, Node* b) {
  const Tensor &av = a->value, &bv = b->value;
  if (av.ndim() != 2 || bv.ndim() != 2 || av.dim(1) != bv.dim(0)) {
    throw DimensionError("matmul: " + shape_to_string(av.shape()) + " vs " +
                         shape_to_string(bv.shape()));
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor y({m, n});
  for (std::size_t r = 0; r < m; ++r) {
    const double* ar = av.data() + r * k;
    double* yr = y.data() + r * n;
    for (std::size_t i = 0; i < k; ++i) {
      const double av_ri = ar[i];
      const double* br = bv.data() + i * n;
      for (std::size_t c = 0; c < n; ++c) yr[c] += av_ri * br[c];
    }
  }
  return make(std::move(y), {a, b}, [m, k, n](Node& self) {
    Node *a = self.parents[0], *b = self.parents[1];
    Tensor& ga = a->ensure_grad();
    Tensor& gb = b->ensure_grad();
    for (std::size_t r = 0; r < m; ++r) {
      const double* gr = self.grad.data() + r * n;
      const double* ar = a->value.data() + r * k;
      double* gar = ga.data() + r * k;
      for (std::size_t i = 0; i < k; ++i) {
        const double* br = b->value.data() + i * n;
        double* gbr = gb.data() + i * n;
        double acc = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
          acc += gr[c] * br[c];
          gbr[c] += ar[i] * gr[c];
        }
        gar[i] += acc;
      }
    }
  });
}

Node* Graph::matmul_nt(Node* a, Node* b) {
  const Tensor &av = a->value, &bv = b->value;
  if (av.ndim() != 2 || bv.ndim() != 2 || av.dim(1) != bv.dim(1)) {
    throw DimensionError("matmul_nt: " + shape_to_string(av.shape()) + " vs " +
                         shape_to_string(bv.shape()));
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(0);
  Tensor y({m, n});
  for (std::size_t r = 0; r < m; ++r) {
    const double* ar = av.data() + r * k;
    double* yr = y.data() + r * n;
    for (std::size_t c = 0; c < n; ++c) {
      const double* br = bv.data() + c * k;
      double acc = 0.0;
      for (std::size_t i = 0; i < k; ++i) acc += ar[i] * br[i];
      yr[c] = acc;
    }
  }
  return make(std::move(y), {a, b}, [m, k, n](Node& self) {
    Node *a = self.parents[0], *b = self.parents[1];
    Tensor& ga = a->ensure_grad();
    Tensor& gb = b->ensure_grad();
    for (std::size_t r = 0; r < m; ++r) {
      const double* gr = self.grad.data() + r * n;
      const double* ar = a->value.data() + r * k;
      double* gar = ga.data() + r * k;
      for (std::size_t c = 0; c < n; ++c) {
        const double g = gr[c];
        if (g == 0.0) continue;
        const double* br = b->value.data() + c * k;
        double* gbr = gb.data() + c * k;
        for (std::size_t i = 0; i < k; ++i) {
          gar[i] += g * br[i];
          gbr[i] += g * ar[i];
        }
      }
    }
  });
}

Node* Graph::conv1d(Node* x, Node* w, Node* b, Padding pad) {
  Tensor y = conv1d_forward(x->value, w->value, b->value, pad);
  return make(std::move(y), {x, w, b}, [pad](Node& self) {
    Node *x = self.parents[0], *w = self.parents[1], *b = self.parents[2];
    conv1d_backward(x->value, w->value, self.grad, pad, x->ensure_grad(), w->ensure_grad(),
                    b->ensure_grad());
  });
}

Node* Graph::conv2d(Node* x, Node* w, Node* b, Padding pad) {
  Tensor y = conv2d_forward(x->value, w->value, b->value, pad);
  return make(std::move(y), {x, w, b}, [pad](Node& self) {
    Node *x = self.parents[0], *w = self.parents[1], *b = self.parents[2];
    conv2d_backward(x->value, w->value, self.grad, pad, x->ensure_grad(), w->ensure_grad(),
                    b->ensure_grad());
  });
}

Node* Graph::maxpool1d(Node* x, std::size_t window) {
  PoolResult r = maxpool1d_forward(x->value, window);
  return make(std::move(r.out), {x}, [argmax = std::move(r.argmax)](Node& self) {
    maxpool_backward(argmax, self.grad, self.parents[0]->ensure_grad());
  });
}

Node* Graph::maxpool2d(Node* x, std::size_t window) {
  PoolResult r = maxpool2d_forward(x->value, window);
  return make(std::move(r.out), {x}, [argmax = std::move(r.argmax)](Node& self) {
    maxpool_backward(argmax, self.grad, self.parents[0]->ensure_grad());
  });
}

Node* Graph::upsample1d(Node* x, std::size_t factor, std::size_t out_len) {
  Tensor y = upsample1d_forward(x->value, factor, out_len);
  return make(std::move(y), {x}, [factor](Node& self) {
    upsample1d_backward(self.grad, factor, self.parents[0]->ensure_grad());
  });
}

Node* Graph::upsample2d(Node* x, std::size_t factor, std::size_t out_h, std::size_t out_w) {
  Tensor y = upsample2d_forward(x->value, factor, out_h, out_w);
  return make(std::move(y), {x}, [factor](Node& self) {
    upsample2d_backward(self.grad, factor, self.parents[0]->ensure_grad());
  });
}

Node* Graph::activation(Node* x, Activation kind) {
  Tensor y = activation_apply(x->value, kind);
  return make(std::move(y), {x}, [kind](Node& self) {
    Node* x = self.parents[0];
    Tensor& gx = x->ensure_grad();
    const double* xi = x->value.data();
    const double* yo = self.value.data();
    const double* g = self.grad.data();
    double* out = gx.data();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      out[i] += g[i] * activation_deriv(kind, xi[i], yo[i]);
    }
  });
}

Node* Graph::reshape(Node* x, std::vector<std::size_t> shape) {
  Tensor y = x->value.reshaped(std::move(shape));
  return make(std::move(y), {x}, [](Node& self) {
    Tensor& gx = self.parents[0]->ensure_grad();
    const double* g = self.grad.data();
    double* out = gx.data();
    for (std::size_t i = 0; i < gx.size(); ++i) out[i] += g[i];
  });
}

Node* Graph::add(Node* a, Node* b) {
  require_same_shape(a->value, b->value, "add");
  Tensor y(a->value.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a->value[i] + b->value[i];
  return make(std::move(y), {a, b}, [](Node& self) {
    for (Node* p : self.parents) {
      Tensor& gp = p->ensure_grad();
      const double* g = self.grad.data();
      double* out = gp.data();
      for (std::size_t i = 0; i < gp.size(); ++i) out[i] += g[i];
    }
  });
}

Node* Graph::scale(Node* x, double s) {
  Tensor y(x->value.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = s * x->value[i];
  return make(std::move(y), {x}, [s](Node& self) {
    Tensor& gx = self.parents[0]->ensure_grad();
    const double* g = self.grad.data();
    double* out = gx.data();
    for (std::size_t i = 0; i < gx.size(); ++i) out[i] += s * g[i];
  });
}

Node* Graph::row_softmax(Node* x) {
  const Tensor& xv = x->value;
  if (xv.ndim() != 2) {
    throw DimensionError("row_softmax expects a matrix, got " + shape_to_string(xv.shape()));
  }
  const std::size_t rows = xv.dim(0), cols = xv.dim(1);
  Tensor y({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.data() + r * cols;
    double* yr = y.data() + r * cols;
    double mx = xr[0];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, xr[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      yr[c] = std::exp(xr[c] - mx);
      sum += yr[c];
    }
    for (std::size_t c = 0; c < cols; ++c) yr[c] /= sum;
  }
  return make(std::move(y), {x}, [rows, cols](Node& self) {
    Tensor& gx = self.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* yr = self.value.data() + r * cols;
      const double* gr = self.grad.data() + r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += gr[c] * yr[c];
      double* out = gx.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) out[c] += yr[c] * (gr[c] - dot);
    }
  });
}

Node* Graph::tree_route(Node* decisions) {
  const Tensor& dv = decisions->value;
  if (dv.ndim() != 2) {
    throw DimensionError("tree_route expects [batch, decisions], got " +
                         shape_to_string(dv.shape()));
  }
  const std::size_t batch = dv.dim(0), n_dec = dv.dim(1);
  const std::size_t n_leaf = n_dec + 1;
  if (n_leaf == 0 || (n_leaf & (n_leaf - 1)) != 0) {
    throw DimensionError("tree_route: " + std::to_string(n_dec) +
                         " decisions do not form a complete binary tree");
  }
  const std::size_t total = n_dec + n_leaf;
  std::vector<double> reach(batch * total);
  Tensor q({batch, n_leaf});
  for (std::size_t bi = 0; bi < batch; ++bi) {
    const double* dr = dv.data() + bi * n_dec;
    double* rr = reach.data() + bi * total;
    rr[0] = 1.0;
    for (std::size_t i = 0; i < n_dec; ++i) {
      rr[2 * i + 1] = rr[i] * dr[i];
      rr[2 * i + 2] = rr[i] * (1.0 - dr[i]);
    }
    double* qr = q.data() + bi * n_leaf;
    for (std::size_t l = 0; l < n_leaf; ++l) qr[l] = rr[n_dec + l];
  }
  return make(std::move(q), {decisions},
              [batch, n_dec, n_leaf, total, reach = std::move(reach)](Node& self) {
                Node* dec = self.parents[0];
                Tensor& gd = dec->ensure_grad();
                std::vector<double> gr(total);
                for (std::size_t bi = 0; bi < batch; ++bi) {
                  const double* rr = reach.data() + bi * total;
                  const double* dr = dec->value.data() + bi * n_dec;
                  const double* gq = self.grad.data() + bi * n_leaf;
                  double* gdr = gd.data() + bi * n_dec;
                  for (std::size_t l = 0; l < n_leaf; ++l) gr[n_dec + l] = gq[l];
                  for (std::size_t i = n_dec; i-- > 0;) {
                    const double gl = gr[2 * i + 1], grt = gr[2 * i + 2];
                    gr[i] = gl * dr[i] + grt * (1.0 - dr[i]);
                    gdr[i] += (gl - grt) * rr[i];
                  }
                }
              });
}

Node* Graph::cross_entropy(Node* probs, Tensor targets) {
  require_same_shape(probs->value, targets, "cross_entropy");
  if (probs->value.ndim() != 2) {
    throw DimensionError("cross_entropy expects [batch, classes], got " +
                         shape_to_string(probs->value.shape()));
  }
  const std::size_t batch = probs->value.dim(0), k = probs->value.dim(1);
  double loss = 0.0;
  const double* p = probs->value.data();
  const double* t = targets.data();
  for (std::size_t i = 0; i < batch * k; ++i) {
    if (t[i] != 0.0) {
      loss -= t[i] * std::log(std::clamp(p[i], kProbFloor, 1.0));
    }
  }
  loss /= static_cast<double>(batch);
  return make(Tensor::scalar(loss), {probs},
              [batch, k, targets = std::move(targets)](Node& self) {
                Node* probs = self.parents[0];
                Tensor& gp = probs->ensure_grad();
                const double g = self.grad[0] / static_cast<double>(batch);
                const double* p = probs->value.data();
                const double* t = targets.data();
                double* out = gp.data();
                for (std::size_t i = 0; i < batch * k; ++i) {
                  if (t[i] != 0.0 && p[i] > kProbFloor && p[i] < 1.0) {
                    out[i] -= g * t[i] / p[i];
                  }
                }
              });
}

Node* Graph::squared_error(Node* pred, Tensor target) {
  require_same_shape(pred->value, target, "squared_error");
  const std::size_t batch = pred->value.dim(0);
  double loss = 0.0;
  const double* p = pred->value.data();
  const double* t = target.data();
  for (std::size_t i = 0; i < pred->value.size(); ++i) {
    const double d = p[i] - t[i];
    loss += d * d;
  }
  loss /= static_cast<double>(batch);
  return make(Tensor::scalar(loss), {pred},
              [batch, target = std::move(target)](Node& self) {
                Node* pred = self.parents[0];
                Tensor& gp = pred->ensure_grad();
                const double g = 2.0 * self.grad[0] / static_cast<double>(batch);
                const double* p = pred->value.data();
                const double* t = target.data();
                double* out = gp.data();
                for (std::size_t i = 0; i < gp.size(); ++i) out[i] += g * (p[i] - t[i]);
              });
}

void Graph::backward(Node* loss) {
  if (nodes_.empty()) throw StateError("backward requested before any forward pass was recorded");
  if (loss == nullptr || !owns(loss)) {
    throw StateError("backward requested for a node outside this graph");
  }
  if (loss->value.size() != 1) {
    throw StateError("backward requires a scalar loss, got " +
                     shape_to_string(loss->value.shape()));
  }
  if (!loss->requires_grad) return;  // nothing trainable feeds the loss

  // Restrict the sweep to ancestors of the loss.
  std::unordered_set<const Node*> needed;
  std::vector<Node*> stack{loss};
  needed.insert(loss);
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    for (Node* p : n->parents) {
      if (p->requires_grad && needed.insert(p).second) stack.push_back(p);
    }
  }

  loss->ensure_grad();
  loss->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = *it;
    if (!n.backward_fn || !needed.count(&n)) continue;
    if (n.grad.size() != n.value.size()) continue;  // no gradient ever reached this node
    n.backward_fn(n);
  }
}

}  // namespace grcan
