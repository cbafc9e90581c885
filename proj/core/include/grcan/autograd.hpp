#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "grcan/layers.hpp"
#include "grcan/parameter.hpp"
#include "grcan/tensor.hpp"

namespace grcan {

// One value in a recorded forward pass. Gradient buffers are allocated
// during backward, only for nodes on a path from a parameter to the loss.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<Node*> parents;
  std::function<void(Node&)> backward_fn;

  Tensor& ensure_grad() {
    if (grad.size() != value.size()) grad = Tensor(value.shape());
    return grad;
  }
};

// Tape for a single forward pass. Creation order doubles as a topological
// order, so backward is a reverse sweep. One Graph per batch per loss; a
// graph is cheap to build and not reused across parameter updates.
class Graph {
public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf holding a constant; never receives gradient.
  Node* input(Tensor v);

  // Leaf aliasing a trainable parameter; backward adds into param.grad.
  Node* param(Parameter& p);

  Node* dense(Node* x, Node* w, Node* b);
  // a [M,K] * b [K,N]
  Node* matmul(Node* a, Node* b);
  // a [M,K] * b^T where b is [N,K]; used for row-per-unit weight layouts.
  Node* matmul_nt(Node* a, Node* b);
  Node* conv1d(Node* x, Node* w, Node* b, Padding pad);
  Node* conv2d(Node* x, Node* w, Node* b, Padding pad);
  Node* maxpool1d(Node* x, std::size_t window);
  Node* maxpool2d(Node* x, std::size_t window);
  Node* upsample1d(Node* x, std::size_t factor, std::size_t out_len);
  Node* upsample2d(Node* x, std::size_t factor, std::size_t out_h, std::size_t out_w);
  Node* activation(Node* x, Activation kind);
  Node* reshape(Node* x, std::vector<std::size_t> shape);
  Node* add(Node* a, Node* b);
  Node* scale(Node* x, double s);
  Node* row_softmax(Node* x);

  // decisions [B, 2^k - 1] -> leaf reach probabilities [B, 2^k]. Entry d of
  // a decision row is the probability of taking the left edge at heap
  // position d; leaves are indexed by their left(0)/right(1) path bits.
  Node* tree_route(Node* decisions);

  // -(1/B) sum_bk t[b,k] log clip(p[b,k]); probabilities clipped to
  // [1e-7, 1] before the log. Targets may be soft.
  Node* cross_entropy(Node* probs, Tensor targets);

  // (1/B) sum_b sum_f (pred - target)^2 : mean over rows, sum over the
  // remaining extents.
  Node* squared_error(Node* pred, Tensor target);

  // Reverse sweep from a scalar loss; accumulates into every reachable
  // parameter's grad. Throws StateError if no forward pass was recorded or
  // loss is not a scalar of this graph.
  void backward(Node* loss);

  std::size_t node_count() const { return nodes_.size(); }

  static constexpr double kProbFloor = 1e-7;

private:
  Node* make(Tensor value, std::vector<Node*> parents, std::function<void(Node&)> fn);
  bool owns(const Node* n) const;

  std::deque<Node> nodes_;
};

}  // namespace grcan
