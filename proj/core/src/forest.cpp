#include "grcan/forest.hpp"

#include <algorithm>
#include <cmath>

#include "grcan/autograd.hpp"
#include "grcan/errors.hpp"

namespace grcan {

TreeShape::TreeShape(std::size_t d) : depth(d) {
  if (d < 1 || d > 24) {
    throw ConfigError("tree depth must be in [1, 24], got " + std::to_string(d));
  }
}

ForestParams::ForestParams(std::size_t n_tree, TreeShape shape, std::size_t n_class,
                           std::size_t in_width, Rng& rng, const std::string& name_prefix)
    : shape_(shape), n_class_(n_class), in_width_(in_width) {
  if (n_tree == 0) throw ConfigError("forest needs at least one tree");
  if (n_class < 2) throw ConfigError("forest needs at least two classes");
  if (in_width == 0) throw ConfigError("forest input width must be positive");
  trees_.reserve(n_tree);
  for (std::size_t t = 0; t < n_tree; ++t) {
    const std::string base = name_prefix + "/tree" + std::to_string(t);
    TreeParams tp;
    tp.weights = Parameter::uniform_init(base + "/w", {shape.decision_count(), in_width},
                                         in_width, rng);
    // Leaf logits start near zero: distributions begin close to uniform
    // with random tie-breaks.
    tp.leaf_logits = Parameter(base + "/leaf", Tensor({shape.leaf_count(), n_class}));
    for (std::size_t i = 0; i < tp.leaf_logits.value.size(); ++i) {
      tp.leaf_logits.value[i] = rng.uniform_in(-0.1, 0.1);
    }
    trees_.push_back(std::move(tp));
  }
  leaf_dist_.resize(trees_.size());
  refresh_leaf_distributions();
}

Tensor row_softmax_values(const Tensor& logits) {
  const std::size_t rows = logits.dim(0), cols = logits.dim(1);
  Tensor out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = logits.data() + r * cols;
    double* y = out.data() + r * cols;
    double mx = x[0];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      sum += y[c];
    }
    for (std::size_t c = 0; c < cols; ++c) y[c] /= sum;
  }
  return out;
}

void ForestParams::refresh_leaf_distributions() {
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    leaf_dist_[t] = row_softmax_values(trees_[t].leaf_logits.value);
  }
}

std::vector<Parameter*> ForestParams::decision_params() {
  std::vector<Parameter*> out;
  out.reserve(trees_.size());
  for (auto& t : trees_) out.push_back(&t.weights);
  return out;
}

std::vector<Parameter*> ForestParams::leaf_params() {
  std::vector<Parameter*> out;
  out.reserve(trees_.size());
  for (auto& t : trees_) out.push_back(&t.leaf_logits);
  return out;
}

std::vector<double> decision_probs(std::span<const double> x_fc, const Tensor& weights) {
  if (weights.ndim() != 2 || weights.dim(1) != x_fc.size()) {
    throw DimensionError("decision_probs: input width " + std::to_string(x_fc.size()) +
                         " does not match weights " + shape_to_string(weights.shape()));
  }
  const std::size_t n_dec = weights.dim(0), width = weights.dim(1);
  std::vector<double> out(n_dec);
  for (std::size_t d = 0; d < n_dec; ++d) {
    const double* w = weights.data() + d * width;
    double z = 0.0;
    for (std::size_t i = 0; i < width; ++i) z += w[i] * x_fc[i];
    out[d] = sigmoid(z);
  }
  return out;
}

std::vector<double> leaf_reach_probs(std::span<const double> decisions) {
  const std::size_t n_dec = decisions.size();
  const std::size_t n_leaf = n_dec + 1;
  if (n_dec == 0 || (n_leaf & (n_leaf - 1)) != 0) {
    throw DimensionError("leaf_reach_probs: " + std::to_string(n_dec) +
                         " decisions do not form a complete binary tree");
  }
  std::vector<double> reach(n_dec + n_leaf);
  reach[0] = 1.0;
  for (std::size_t i = 0; i < n_dec; ++i) {
    reach[2 * i + 1] = reach[i] * decisions[i];
    reach[2 * i + 2] = reach[i] * (1.0 - decisions[i]);
  }
  return std::vector<double>(reach.begin() + static_cast<std::ptrdiff_t>(n_dec), reach.end());
}

std::vector<double> tree_predict(std::span<const double> q, const Tensor& leaf_dist) {
  if (leaf_dist.ndim() != 2 || leaf_dist.dim(0) != q.size()) {
    throw DimensionError("tree_predict: " + std::to_string(q.size()) +
                         " leaf probabilities vs distribution " +
                         shape_to_string(leaf_dist.shape()));
  }
  const std::size_t k = leaf_dist.dim(1);
  std::vector<double> out(k, 0.0);
  for (std::size_t l = 0; l < q.size(); ++l) {
    const double* p = leaf_dist.data() + l * k;
    for (std::size_t c = 0; c < k; ++c) out[c] += q[l] * p[c];
  }
  return out;
}

std::vector<double> forest_predict(std::span<const double> x_fc, const ForestParams& forest) {
  if (forest.tree_count() == 0) throw ConfigError("forest_predict on an empty forest");
  std::vector<double> acc(forest.n_class(), 0.0);
  for (std::size_t t = 0; t < forest.tree_count(); ++t) {
    const auto d = decision_probs(x_fc, forest.tree(t).weights.value);
    const auto q = leaf_reach_probs(d);
    const auto p = tree_predict(q, forest.leaf_distribution(t));
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += p[c];
  }
  const double inv = 1.0 / static_cast<double>(forest.tree_count());
  for (double& v : acc) v *= inv;
  return acc;
}

std::size_t argmax_label(std::span<const double> dist) {
  if (dist.empty()) throw DimensionError("argmax_label on an empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < dist.size(); ++i) {
    if (dist[i] > dist[best]) best = i;
  }
  return best;
}

void update_leaf_distributions(ForestParams& forest, RmsProp& opt) {
  for (std::size_t t = 0; t < forest.tree_count(); ++t) {
    opt.step(forest.tree(t).leaf_logits);
  }
  forest.refresh_leaf_distributions();
}

Node* forest_forward(Graph& g, Node* x_fc, ForestParams& forest) {
  Node* acc = nullptr;
  for (std::size_t t = 0; t < forest.tree_count(); ++t) {
    TreeParams& tp = forest.tree(t);
    Node* logits = g.matmul_nt(x_fc, g.param(tp.weights));
    Node* decisions = g.activation(logits, Activation::Sigmoid);
    Node* q = g.tree_route(decisions);
    Node* leaf_dist = g.row_softmax(g.param(tp.leaf_logits));
    Node* dist = g.matmul(q, leaf_dist);
    acc = acc ? g.add(acc, dist) : dist;
  }
  return g.scale(acc, 1.0 / static_cast<double>(forest.tree_count()));
}

}  // namespace grcan
