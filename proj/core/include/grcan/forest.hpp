#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "grcan/optimizer.hpp"
#include "grcan/parameter.hpp"
#include "grcan/rng.hpp"
#include "grcan/tensor.hpp"

namespace grcan {

class Graph;
struct Node;

// Complete binary tree with decision levels 0..depth inclusive, so a tree
// of depth n has 2^(n+1) leaves and 2^(n+1)-1 decision nodes (depth 2 ->
// 8 leaves, 7 decision nodes of which 4 sit on the last level).
struct TreeShape {
  explicit TreeShape(std::size_t depth);

  std::size_t depth;
  std::size_t leaf_count() const { return std::size_t{1} << (depth + 1); }
  std::size_t decision_count() const { return leaf_count() - 1; }
};

// One soft tree: a routing weight row per decision node plus unconstrained
// leaf logits. The class distribution per leaf is always the row-softmax of
// the logits, cached for inference.
struct TreeParams {
  Parameter weights;      // [decision_count, in_width]
  Parameter leaf_logits;  // [leaf_count, n_class]
};

class ForestParams {
public:
  ForestParams(std::size_t n_tree, TreeShape shape, std::size_t n_class, std::size_t in_width,
               Rng& rng, const std::string& name_prefix);

  std::size_t tree_count() const { return trees_.size(); }
  const TreeShape& shape() const { return shape_; }
  std::size_t n_class() const { return n_class_; }
  std::size_t in_width() const { return in_width_; }

  TreeParams& tree(std::size_t t) { return trees_[t]; }
  const TreeParams& tree(std::size_t t) const { return trees_[t]; }

  // Row-softmax of the leaf logits of tree t (cached).
  const Tensor& leaf_distribution(std::size_t t) const { return leaf_dist_[t]; }

  // Recomputes every cached leaf distribution from the logits.
  void refresh_leaf_distributions();

  std::vector<Parameter*> decision_params();
  std::vector<Parameter*> leaf_params();

private:
  TreeShape shape_;
  std::size_t n_class_;
  std::size_t in_width_;
  std::vector<TreeParams> trees_;
  std::vector<Tensor> leaf_dist_;
};

// Routing probabilities for one sample: entry d is sigma(w_d . x_fc), the
// probability of taking the left edge at decision node d.
std::vector<double> decision_probs(std::span<const double> x_fc, const Tensor& weights);

// Probability of reaching each leaf given per-node left-edge probabilities;
// decisions.size() must be 2^k - 1. Output sums to 1.
std::vector<double> leaf_reach_probs(std::span<const double> decisions);

// Class distribution of one tree: q [leaves] . leaf_dist [leaves, classes].
std::vector<double> tree_predict(std::span<const double> q, const Tensor& leaf_dist);

// Mean of the per-tree distributions.
std::vector<double> forest_predict(std::span<const double> x_fc, const ForestParams& forest);

// Smallest index attaining the maximum.
std::size_t argmax_label(std::span<const double> dist);

// Softmax over rows of a matrix of logits.
Tensor row_softmax_values(const Tensor& logits);

// One optimizer step on every tree's leaf logits from their accumulated
// gradients; the cached distributions are re-projected afterwards.
void update_leaf_distributions(ForestParams& forest, RmsProp& opt);

// Builds the forward graph for a whole batch: x_fc [B, F] -> mean class
// distribution [B, K]. Used for both training (with backward) and batched
// inference (forward only).
Node* forest_forward(Graph& g, Node* x_fc, ForestParams& forest);

}  // namespace grcan
