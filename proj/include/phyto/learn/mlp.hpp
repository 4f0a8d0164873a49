#pragma once

#include <vector>

#include "phyto/learn/models.hpp"
#include "phyto/rng.hpp"

namespace phyto::learn {

struct MlpGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

/// Fully connected ReLU network with a soft-max output layer. Layer l maps
/// rows through `weights[l]` (fan_in x fan_out) plus `biases[l]`.
struct MlpNetwork {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  /// He-normal weights, zero biases.
  static MlpNetwork init(int inputs, const std::vector<int>& hidden, int outputs, Rng& rng);

  /// Soft-max class probabilities, one row per input row.
  Matrix forward(const Matrix& X) const;

  /// Mean cross-entropy plus l2 / (2 n) * sum of squared weights.
  double loss(const Matrix& X, const std::vector<Label>& y, double l2) const;

  /// Same loss; fills `grad` with its analytic gradient by back-propagation.
  double loss_and_gradient(const Matrix& X, const std::vector<Label>& y, double l2, MlpGradients& grad) const;
};

/// Mini-batch Adam training. The step size is halved whenever the hold-out
/// loss has not improved for `patience` epochs; training stops on the plateau
/// after `max_halvings` halvings or at `max_epochs`. The best hold-out weights
/// are kept.
class MlpClassifier final : public Classifier {
 public:
  static MlpClassifier fit(const Matrix& X, const std::vector<Label>& y, const MlpParams& p, std::uint64_t seed);
  static MlpClassifier from_json(const nlohmann::json& j);

  ClassifierKind kind() const override { return ClassifierKind::MLP; }
  Eigen::Index input_dim() const override { return net_.weights.front().rows(); }
  Vector positive_score(const Matrix& X) const override;
  nlohmann::json to_json() const override;

  const MlpNetwork& network() const { return net_; }
  int epochs_run() const { return epochs_run_; }

 private:
  MlpNetwork net_;
  int epochs_run_ = 0;
};

}  // namespace phyto::learn
