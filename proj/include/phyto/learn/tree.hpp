#pragma once

#include <vector>

#include "phyto/learn/models.hpp"

namespace phyto::learn {

struct TreeNode {
  int feature = -1;  ///< -1 marks a leaf
  double threshold = 0.0;
  int left = -1;   ///< rows with x[feature] <= threshold
  int right = -1;
  double positive_fraction = 0.0;
};

struct TreeGrowOptions {
  int max_depth = 0;  ///< 0 = unlimited
  int min_leaf = 1;
  /// Features examined per split; 0 = all. More are examined only while none
  /// of the sampled ones yields a valid split.
  int max_features = 0;
  /// Extra-trees rule: one uniform threshold per examined feature.
  bool random_thresholds = false;
};

/// A CART tree grown on Gini impurity.
class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  /// Grows on the given row multiset (bootstrap duplicates allowed).
  static DecisionTree grow(const Matrix& X, const std::vector<Label>& y, std::vector<std::size_t> rows,
                           const TreeGrowOptions& opts, Rng& rng);

  /// Fraction of label-1 training rows in the leaf reached by `row`.
  double leaf_fraction(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t depth() const;

 private:
  std::vector<TreeNode> nodes_;
};

/// Single decision tree, random forest (bootstrap + sqrt(d) features) or extra
/// trees (no bootstrap, sqrt(d) features, random thresholds). Ensemble scores
/// are the fraction of trees voting label 1; a single tree scores by its leaf
/// fraction.
class TreeEnsemble final : public Classifier {
 public:
  static TreeEnsemble fit(ClassifierKind kind, const Matrix& X, const std::vector<Label>& y, const TreeParams& p,
                          std::uint64_t seed);
  static TreeEnsemble from_json(const nlohmann::json& j);

  ClassifierKind kind() const override { return kind_; }
  Eigen::Index input_dim() const override { return input_dim_; }
  Vector positive_score(const Matrix& X) const override;
  nlohmann::json to_json() const override;

  const std::vector<DecisionTree>& trees() const { return trees_; }

 private:
  ClassifierKind kind_ = ClassifierKind::RandomForest;
  Eigen::Index input_dim_ = 0;
  std::vector<DecisionTree> trees_;
};

}  // namespace phyto::learn
