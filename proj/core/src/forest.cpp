#include "mdcsa/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "mdcsa/random.hpp"

namespace mdcsa {

namespace {

double gini(const std::vector<double>& class_weight, double total) {
  if (total <= 0.0) return 0.0;
  double g = 1.0;
  for (double w : class_weight) {
    double p = w / total;
    g -= p * p;
  }
  return g;
}

}  // namespace

Split find_best_split(const std::vector<std::vector<double>>& X,
                      const std::vector<int>& y,
                      const std::vector<double>& weights,
                      const std::vector<int>& indices,
                      const std::vector<int>& features, int n_classes,
                      int min_leaf) {
  Split best;
  std::vector<double> parent(static_cast<std::size_t>(n_classes), 0.0);
  double total = 0.0;
  for (int i : indices) {
    parent[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])] += weights[static_cast<std::size_t>(i)];
    total += weights[static_cast<std::size_t>(i)];
  }
  double parent_gini = gini(parent, total);

  std::vector<int> sorted = indices;
  for (int f : features) {
    std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
      return X[static_cast<std::size_t>(a)][static_cast<std::size_t>(f)] <
             X[static_cast<std::size_t>(b)][static_cast<std::size_t>(f)];
    });
    std::vector<double> left(static_cast<std::size_t>(n_classes), 0.0);
    std::vector<double> right = parent;
    double left_total = 0.0, right_total = total;
    for (std::size_t pos = 0; pos + 1 < sorted.size(); ++pos) {
      int i = sorted[pos];
      double w = weights[static_cast<std::size_t>(i)];
      left[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])] += w;
      right[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])] -= w;
      left_total += w;
      right_total -= w;
      double v = X[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)];
      double next = X[static_cast<std::size_t>(sorted[pos + 1])][static_cast<std::size_t>(f)];
      if (v == next) continue;
      if (static_cast<int>(pos) + 1 < min_leaf ||
          static_cast<int>(sorted.size() - pos - 1) < min_leaf) {
        continue;
      }
      double g = parent_gini -
                 (left_total / total) * gini(left, left_total) -
                 (right_total / total) * gini(right, right_total);
      if (g > best.gain + 1e-15) {
        best.gain = g;
        best.feature = f;
        best.threshold = (v + next) / 2.0;
      }
    }
  }
  return best;
}

void RandomForest::fit(const std::vector<std::vector<double>>& X,
                       const std::vector<int>& y, std::uint64_t seed,
                       const std::vector<double>* sample_weights) {
  if (X.empty() || X.size() != y.size()) {
    throw std::invalid_argument("bad training data");
  }
  int n_classes = 1 + *std::max_element(y.begin(), y.end());
  if (!config_.warm_start) trees_.clear();
  n_classes_ = std::max(n_classes_, n_classes);

  std::vector<double> weights;
  if (sample_weights) {
    weights = *sample_weights;
    if (weights.size() != X.size()) throw std::invalid_argument("weight size mismatch");
  } else {
    weights.assign(X.size(), 1.0);
  }

  int n_features = static_cast<int>(X[0].size());
  int mtry = config_.mtry > 0
                 ? config_.mtry
                 : std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n_features))));

  SeedStream seeds(seed);
  while (static_cast<int>(trees_.size()) < config_.n_trees) {
    std::size_t tree_idx = trees_.size();
    auto rng = seeds.engine("bootstrap", tree_idx);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(X.size()) - 1);

    std::vector<int> sample(X.size());
    for (auto& s : sample) s = pick(rng);

    Tree tree;
    std::vector<int> all_features(static_cast<std::size_t>(n_features));
    std::iota(all_features.begin(), all_features.end(), 0);

    // Iterative growth with an explicit stack of (node id, indices).
    struct Work {
      int node;
      std::vector<int> indices;
    };
    tree.nodes.push_back({});
    std::vector<Work> stack{{0, sample}};
    while (!stack.empty()) {
      Work w = std::move(stack.back());
      stack.pop_back();

      std::vector<double> class_weight(static_cast<std::size_t>(n_classes_), 0.0);
      for (int i : w.indices) {
        class_weight[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])] +=
            weights[static_cast<std::size_t>(i)];
      }
      int majority = static_cast<int>(
          std::max_element(class_weight.begin(), class_weight.end()) - class_weight.begin());
      tree.nodes[static_cast<std::size_t>(w.node)].leaf_class = majority;

      bool pure = std::count_if(class_weight.begin(), class_weight.end(),
                                [](double cw) { return cw > 0.0; }) <= 1;
      if (pure || static_cast<int>(w.indices.size()) < 2 * config_.min_leaf) continue;

      std::vector<int> features = all_features;
      std::shuffle(features.begin(), features.end(), rng);
      features.resize(static_cast<std::size_t>(std::min(mtry, n_features)));

      Split split = find_best_split(X, y, weights, w.indices, features, n_classes_,
                                    config_.min_leaf);
      if (split.feature < 0) continue;

      std::vector<int> left_idx, right_idx;
      for (int i : w.indices) {
        if (X[static_cast<std::size_t>(i)][static_cast<std::size_t>(split.feature)] <= split.threshold) {
          left_idx.push_back(i);
        } else {
          right_idx.push_back(i);
        }
      }
      if (left_idx.empty() || right_idx.empty()) continue;

      int left = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      int right = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      Node& node = tree.nodes[static_cast<std::size_t>(w.node)];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = left;
      node.right = right;
      stack.push_back({left, std::move(left_idx)});
      stack.push_back({right, std::move(right_idx)});
    }
    trees_.push_back(std::move(tree));
  }
}

int RandomForest::tree_predict(const Tree& tree, const std::vector<double>& x) const {
  int node = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const Node& n = tree.nodes[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[static_cast<std::size_t>(node)].leaf_class;
}

std::vector<double> RandomForest::vote_fractions(const std::vector<double>& x) const {
  if (trees_.empty()) throw std::logic_error("forest not fitted");
  std::vector<double> votes(static_cast<std::size_t>(n_classes_), 0.0);
  for (const auto& tree : trees_) {
    votes[static_cast<std::size_t>(tree_predict(tree, x))] += 1.0;
  }
  for (double& v : votes) v /= static_cast<double>(trees_.size());
  return votes;
}

int RandomForest::predict(const std::vector<double>& x) const {
  auto votes = vote_fractions(x);
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

}  // namespace mdcsa
