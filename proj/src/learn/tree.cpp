#include "phyto/learn/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phyto/error.hpp"

namespace phyto::learn {

namespace {

double gini(double pos, double total) {
  if (total <= 0.0) return 0.0;
  const double p = pos / total;
  return 2.0 * p * (1.0 - p);
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class Grower {
 public:
  Grower(const Matrix& X, const std::vector<Label>& y, const TreeGrowOptions& opts, Rng& rng)
      : X_(X), y_(y), opts_(opts), rng_(rng), features_(static_cast<std::size_t>(X.cols())) {
    std::iota(features_.begin(), features_.end(), 0);
  }

  std::vector<TreeNode> run(std::vector<std::size_t> rows) {
    build(rows, 0);
    return std::move(nodes_);
  }

 private:
  int build(std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double pos = 0.0;
    for (std::size_t r : rows) pos += y_[r];
    const double n = static_cast<double>(rows.size());
    nodes_[static_cast<std::size_t>(id)].positive_fraction = pos / n;

    const bool pure = pos == 0.0 || pos == n;
    const bool depth_limited = opts_.max_depth > 0 && depth >= opts_.max_depth;
    if (pure || depth_limited || rows.size() < 2 * static_cast<std::size_t>(opts_.min_leaf)) return id;

    const Split split = best_split(rows, pos);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (X_(static_cast<Eigen::Index>(r), split.feature) <= split.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = build(left, depth + 1);
    const int rr = build(right, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = rr;
    return id;
  }

  Split best_split(const std::vector<std::size_t>& rows, double pos) {
    const std::size_t d = features_.size();
    // Partial Fisher-Yates: features are visited in a seeded random order.
    const std::size_t wanted = opts_.max_features > 0 ? std::min<std::size_t>(opts_.max_features, d) : d;
    Split best;
    const double n = static_cast<double>(rows.size());
    const double parent = gini(pos, n);
    for (std::size_t i = 0; i < d; ++i) {
      if (i >= wanted && best.feature >= 0) break;
      const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng_, d - i));
      std::swap(features_[i], features_[j]);
      const int f = static_cast<int>(features_[i]);
      const Split s = opts_.random_thresholds ? random_split(rows, f, pos, parent) : exhaustive_split(rows, f, pos, parent);
      if (s.feature < 0) continue;
      // Equal gains go to the lower feature index.
      if (best.feature < 0 || s.gain > best.gain + 1e-12 ||
          (std::abs(s.gain - best.gain) <= 1e-12 && s.feature < best.feature)) {
        best = s;
      }
    }
    return best;
  }

  Split exhaustive_split(const std::vector<std::size_t>& rows, int f, double pos, double parent) {
    sorted_.clear();
    for (std::size_t r : rows) sorted_.emplace_back(X_(static_cast<Eigen::Index>(r), f), y_[r]);
    std::sort(sorted_.begin(), sorted_.end());
    const double n = static_cast<double>(rows.size());
    const auto min_leaf = static_cast<std::size_t>(opts_.min_leaf);
    Split best;
    double left_pos = 0.0;
    for (std::size_t i = 0; i + 1 < sorted_.size(); ++i) {
      left_pos += sorted_[i].second;
      if (sorted_[i].first == sorted_[i + 1].first) continue;
      const std::size_t nl = i + 1;
      const std::size_t nr = sorted_.size() - nl;
      if (nl < min_leaf || nr < min_leaf) continue;
      const double impurity = (static_cast<double>(nl) * gini(left_pos, static_cast<double>(nl)) +
                               static_cast<double>(nr) * gini(pos - left_pos, static_cast<double>(nr))) /
                              n;
      const double gain = parent - impurity;
      if (best.feature < 0 || gain > best.gain + 1e-12) {
        best.feature = f;
        best.gain = gain;
        best.threshold = 0.5 * (sorted_[i].first + sorted_[i + 1].first);
        // Guard against the midpoint rounding onto the upper value.
        if (best.threshold >= sorted_[i + 1].first) best.threshold = sorted_[i].first;
      }
    }
    return best;
  }

  Split random_split(const std::vector<std::size_t>& rows, int f, double pos, double parent) {
    double lo = X_(static_cast<Eigen::Index>(rows.front()), f);
    double hi = lo;
    for (std::size_t r : rows) {
      const double v = X_(static_cast<Eigen::Index>(r), f);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(hi > lo)) return {};
    double threshold = lo + uniform01(rng_) * (hi - lo);
    if (threshold >= hi) threshold = lo;
    double left_pos = 0.0;
    std::size_t nl = 0;
    for (std::size_t r : rows) {
      if (X_(static_cast<Eigen::Index>(r), f) <= threshold) {
        ++nl;
        left_pos += y_[r];
      }
    }
    const std::size_t nr = rows.size() - nl;
    const auto min_leaf = static_cast<std::size_t>(opts_.min_leaf);
    if (nl < min_leaf || nr < min_leaf || nl == 0 || nr == 0) return {};
    const double n = static_cast<double>(rows.size());
    const double impurity = (static_cast<double>(nl) * gini(left_pos, static_cast<double>(nl)) +
                             static_cast<double>(nr) * gini(pos - left_pos, static_cast<double>(nr))) /
                            n;
    return {f, threshold, parent - impurity};
  }

  const Matrix& X_;
  const std::vector<Label>& y_;
  TreeGrowOptions opts_;
  Rng& rng_;
  std::vector<std::size_t> features_;
  std::vector<std::pair<double, Label>> sorted_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

DecisionTree DecisionTree::grow(const Matrix& X, const std::vector<Label>& y, std::vector<std::size_t> rows,
                                const TreeGrowOptions& opts, Rng& rng) {
  if (rows.empty()) fail(ErrorCode::InvalidArgument, "tree needs at least one row");
  Grower g(X, y, opts, rng);
  return DecisionTree(g.run(std::move(rows)));
}

double DecisionTree::leaf_fraction(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(row(n.feature) <= n.threshold ? n.left : n.right);
  }
  return nodes_[i].positive_fraction;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

TreeEnsemble TreeEnsemble::fit(ClassifierKind kind, const Matrix& X, const std::vector<Label>& y, const TreeParams& p,
                               std::uint64_t seed) {
  TreeEnsemble m;
  m.kind_ = kind;
  m.input_dim_ = X.cols();
  const auto n = static_cast<std::size_t>(X.rows());
  const bool single = kind == ClassifierKind::DecisionTree;
  const int n_trees = single ? 1 : std::max(1, p.trees);

  TreeGrowOptions opts;
  opts.max_depth = p.max_depth;
  opts.min_leaf = std::max(1, p.min_leaf);
  opts.max_features = single ? 0 : std::max(1, static_cast<int>(std::sqrt(static_cast<double>(X.cols()))));
  opts.random_thresholds = kind == ClassifierKind::ExtraTrees;

  m.trees_.reserve(static_cast<std::size_t>(n_trees));
  for (int t = 0; t < n_trees; ++t) {
    // Per-tree stream derived from the root seed by counter.
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(t));
    std::vector<std::size_t> rows(n);
    if (kind == ClassifierKind::RandomForest) {
      for (auto& r : rows) r = static_cast<std::size_t>(uniform_index(rng, n));
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    m.trees_.push_back(DecisionTree::grow(X, y, std::move(rows), opts, rng));
  }
  return m;
}

Vector TreeEnsemble::positive_score(const Matrix& X) const {
  if (X.cols() != input_dim_) {
    fail(ErrorCode::DimensionMismatch,
         "expected " + std::to_string(input_dim_) + " columns, got " + std::to_string(X.cols()));
  }
  Vector out = Vector::Zero(X.rows());
  const bool single = kind_ == ClassifierKind::DecisionTree;
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    double acc = 0.0;
    for (const auto& t : trees_) {
      const double frac = t.leaf_fraction(X.row(r));
      acc += single ? frac : (frac > 0.5 ? 1.0 : 0.0);
    }
    out(r) = acc / static_cast<double>(trees_.size());
  }
  return out;
}

nlohmann::json TreeEnsemble::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes()) {
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.positive_fraction});
    }
    trees.push_back(std::move(nodes));
  }
  return {{"kind", to_string(kind_)}, {"input_dim", input_dim_}, {"trees", trees}};
}

TreeEnsemble TreeEnsemble::from_json(const nlohmann::json& j) {
  TreeEnsemble m;
  m.kind_ = parse_classifier(j.at("kind").get<std::string>());
  m.input_dim_ = j.at("input_dim").get<Eigen::Index>();
  for (const auto& t : j.at("trees")) {
    std::vector<TreeNode> nodes;
    for (const auto& n : t) {
      nodes.push_back({n[0].get<int>(), n[1].get<double>(), n[2].get<int>(), n[3].get<int>(), n[4].get<double>()});
    }
    m.trees_.emplace_back(std::move(nodes));
  }
  return m;
}

}  // namespace phyto::learn
