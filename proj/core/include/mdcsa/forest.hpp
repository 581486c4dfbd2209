#pragma once

#include <cstdint>
#include <vector>

namespace mdcsa {

struct ForestConfig {
  int n_trees = 200;
  int min_leaf = 1;       // minimum weighted-sample count per leaf (by count)
  bool warm_start = false;
  int mtry = 0;           // features per split; 0 = floor(sqrt(n_features))
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;  // Gini impurity decrease
};

/// Best Gini split over the given feature subset; feature = -1 when no
/// split improves impurity. Exposed for direct testing.
Split find_best_split(const std::vector<std::vector<double>>& X,
                      const std::vector<int>& y,
                      const std::vector<double>& weights,
                      const std::vector<int>& indices,
                      const std::vector<int>& features, int n_classes,
                      int min_leaf);

/// CART random forest: bootstrap sampling, Gini impurity splits, majority
/// vote. Sample weights flow into the impurity computation (used for class
/// rebalancing by the medication-state classifier).
class RandomForest {
 public:
  explicit RandomForest(ForestConfig config = {}) : config_(config) {}

  /// Trains up to config.n_trees trees. With warm_start, previously grown
  /// trees are kept and only the missing ones are added.
  void fit(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
           std::uint64_t seed, const std::vector<double>* sample_weights = nullptr);

  int predict(const std::vector<double>& x) const;
  /// Per-class fraction of tree votes.
  std::vector<double> vote_fractions(const std::vector<double>& x) const;

  int n_classes() const { return n_classes_; }
  int n_trees() const { return static_cast<int>(trees_.size()); }
  const ForestConfig& config() const { return config_; }

 private:
  struct Node {
    int feature = -1;  // -1 = leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    int leaf_class = 0;
  };
  struct Tree {
    std::vector<Node> nodes;
  };

  int tree_predict(const Tree& tree, const std::vector<double>& x) const;

  ForestConfig config_;
  int n_classes_ = 0;
  std::vector<Tree> trees_;
};

}  // namespace mdcsa
