#pragma once

#include <memory>
#include <vector>

#include <json.hpp>

#include "phyto/learn/spec.hpp"
#include "phyto/types.hpp"

namespace phyto::learn {

/// A fitted, immutable row transform.
class Transform {
 public:
  virtual ~Transform() = default;
  virtual TransformKind kind() const = 0;
  virtual Matrix apply(const Matrix& X) const = 0;
  virtual nlohmann::json to_json() const = 0;
};

class Normalizer final : public Transform {
 public:
  TransformKind kind() const override { return TransformKind::Normalizer; }
  /// Scales every row to unit L2 norm; all-zero rows stay zero.
  Matrix apply(const Matrix& X) const override;
  nlohmann::json to_json() const override;
};

class Standardizer final : public Transform {
 public:
  Standardizer(Vector mean, Vector scale) : mean_(std::move(mean)), scale_(std::move(scale)) {}
  static Standardizer fit(const Matrix& X);

  TransformKind kind() const override { return TransformKind::Standardizer; }
  Matrix apply(const Matrix& X) const override;
  nlohmann::json to_json() const override;

 private:
  Vector mean_;
  Vector scale_;  ///< population std; 1 for constant columns
};

class MinMaxScaler final : public Transform {
 public:
  MinMaxScaler(Vector min, Vector max) : min_(std::move(min)), max_(std::move(max)) {}
  static MinMaxScaler fit(const Matrix& X);

  TransformKind kind() const override { return TransformKind::MinMax; }
  Matrix apply(const Matrix& X) const override;
  nlohmann::json to_json() const override;

 private:
  Vector min_;
  Vector max_;
};

class VarianceThreshold final : public Transform {
 public:
  VarianceThreshold(double tau, std::vector<std::size_t> kept, std::size_t input_dim)
      : tau_(tau), kept_(std::move(kept)), input_dim_(input_dim) {}
  /// Throws InvalidArgument when every column falls at or below tau.
  static VarianceThreshold fit(const Matrix& X, double tau);

  TransformKind kind() const override { return TransformKind::VarianceThreshold; }
  Matrix apply(const Matrix& X) const override;
  nlohmann::json to_json() const override;

  const std::vector<std::size_t>& kept() const { return kept_; }

 private:
  double tau_;
  std::vector<std::size_t> kept_;
  std::size_t input_dim_;
};

/// Principal components from the eigendecomposition of the sample covariance.
class Pca final : public Transform {
 public:
  Pca(Vector mean, Matrix components, Vector eigenvalues)
      : mean_(std::move(mean)), components_(std::move(components)), eigenvalues_(std::move(eigenvalues)) {}
  static Pca fit(const Matrix& X, const TransformSpec& spec);

  TransformKind kind() const override { return TransformKind::Pca; }
  /// (X - mean) * components
  Matrix apply(const Matrix& X) const override;
  nlohmann::json to_json() const override;

  /// Maps projections back to the input space (centered data + mean).
  Matrix reconstruct(const Matrix& Z) const;

  const Vector& mean() const { return mean_; }
  /// d x k, orthonormal columns sorted by decreasing eigenvalue.
  const Matrix& components() const { return components_; }
  /// All d eigenvalues in decreasing order.
  const Vector& eigenvalues() const { return eigenvalues_; }
  Eigen::Index retained() const { return components_.cols(); }
  double explained_variance_ratio() const;

 private:
  Vector mean_;
  Matrix components_;
  Vector eigenvalues_;
};

std::unique_ptr<Transform> fit_transform(const TransformSpec& spec, const Matrix& X);
std::unique_ptr<Transform> transform_from_json(const nlohmann::json& j);

}  // namespace phyto::learn
