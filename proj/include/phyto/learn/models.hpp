#pragma once

#include <memory>
#include <vector>

#include <json.hpp>

#include "phyto/learn/spec.hpp"
#include "phyto/types.hpp"

namespace phyto::learn {

/// A fitted binary classifier. Immutable after construction and safe to share
/// across threads for prediction.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual ClassifierKind kind() const = 0;
  virtual Eigen::Index input_dim() const = 0;

  /// Confidence for label 1 per row, in [0, 1] and monotone in that confidence.
  virtual Vector positive_score(const Matrix& X) const = 0;
  /// Default decision rule: label 1 when positive_score > 0.5.
  virtual std::vector<Label> predict(const Matrix& X) const;
  virtual nlohmann::json to_json() const = 0;
};

/// Gaussian naive Bayes with per-class means and floored variances.
class GaussianNaiveBayes final : public Classifier {
 public:
  static GaussianNaiveBayes fit(const Matrix& X, const std::vector<Label>& y, const NaiveBayesParams& p);
  static GaussianNaiveBayes from_json(const nlohmann::json& j);

  ClassifierKind kind() const override { return ClassifierKind::GaussianNB; }
  Eigen::Index input_dim() const override { return means_[0].size(); }
  Vector positive_score(const Matrix& X) const override;
  nlohmann::json to_json() const override;

 private:
  std::array<Vector, 2> means_;
  std::array<Vector, 2> vars_;
  std::array<double, 2> log_priors_{};
};

/// Quadratic discriminant analysis with ridge-regularized class covariances.
class Qda final : public Classifier {
 public:
  static Qda fit(const Matrix& X, const std::vector<Label>& y, const QdaParams& p);
  static Qda from_json(const nlohmann::json& j);

  ClassifierKind kind() const override { return ClassifierKind::QDA; }
  Eigen::Index input_dim() const override { return means_[0].size(); }
  Vector positive_score(const Matrix& X) const override;
  nlohmann::json to_json() const override;

  /// log p(x | class) + log prior, per row.
  Vector log_joint(const Matrix& X, Label cls) const;

 private:
  std::array<Vector, 2> means_;
  std::array<Matrix, 2> chol_lower_;  ///< L with L L^T = regularized covariance
  std::array<double, 2> log_det_{};
  std::array<double, 2> log_priors_{};
};

class Knn final : public Classifier {
 public:
  static Knn fit(const Matrix& X, const std::vector<Label>& y, const KnnParams& p);
  static Knn from_json(const nlohmann::json& j);

  ClassifierKind kind() const override { return ClassifierKind::KNN; }
  Eigen::Index input_dim() const override { return X_.cols(); }
  /// Fraction of the k nearest training rows (Euclidean, ties by index) with label 1.
  Vector positive_score(const Matrix& X) const override;
  nlohmann::json to_json() const override;

  int k() const { return k_; }

 private:
  Matrix X_;
  std::vector<Label> y_;
  int k_ = 5;
};

/// Linear SVM trained by Pegasos-style sub-gradient descent on the hinge loss;
/// scores pass the margin through a logistic link fitted on training margins.
class LinearSvm final : public Classifier {
 public:
  static LinearSvm fit(const Matrix& X, const std::vector<Label>& y, const SvmParams& p, std::uint64_t seed);
  static LinearSvm from_json(const nlohmann::json& j);

  ClassifierKind kind() const override { return ClassifierKind::LinearSVM; }
  Eigen::Index input_dim() const override { return w_.size(); }
  Vector positive_score(const Matrix& X) const override;
  /// Sign of the margin.
  std::vector<Label> predict(const Matrix& X) const override;
  nlohmann::json to_json() const override;

  Vector margin(const Matrix& X) const;

 private:
  Vector w_;
  double bias_ = 0.0;
  double platt_a_ = -1.0;
  double platt_b_ = 0.0;
};

/// Fits a classifier of any kind. Validates labels and finiteness.
std::unique_ptr<Classifier> fit_classifier(const ClassifierSpec& spec, const Matrix& X, const std::vector<Label>& y);
std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j);

/// Throws NonFiniteInput / LengthMismatch / SingleClassInput / ClassTooSmall.
void validate_training_data(const Matrix& X, const std::vector<Label>& y);

}  // namespace phyto::learn
