#include "phyto/learn/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "phyto/error.hpp"
#include "json_util.hpp"

namespace phyto::learn {

using detail::json_mat;
using detail::json_vec;
using detail::mat_json;
using detail::vec_json;

namespace {

void check_cols(const Matrix& X, Eigen::Index expected, const char* what) {
  if (X.cols() != expected) {
    fail(ErrorCode::DimensionMismatch, std::string(what) + ": expected " + std::to_string(expected) + " columns, got " +
                                           std::to_string(X.cols()));
  }
}

Vector column_variance(const Matrix& X) {
  const Vector mean = X.colwise().mean().transpose();
  return ((X.rowwise() - mean.transpose()).array().square().colwise().sum() / static_cast<double>(X.rows()))
      .transpose();
}

}  // namespace

Matrix Normalizer::apply(const Matrix& X) const {
  Matrix out = X;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double norm = out.row(r).norm();
    if (norm > 0.0) out.row(r) /= norm;
  }
  return out;
}

nlohmann::json Normalizer::to_json() const { return {{"kind", "nor"}}; }

Standardizer Standardizer::fit(const Matrix& X) {
  Vector mean = X.colwise().mean().transpose();
  Vector scale = column_variance(X).cwiseSqrt();
  for (Eigen::Index c = 0; c < scale.size(); ++c) {
    if (!(scale(c) > 0.0)) scale(c) = 1.0;
  }
  return {std::move(mean), std::move(scale)};
}

Matrix Standardizer::apply(const Matrix& X) const {
  check_cols(X, mean_.size(), "standardizer");
  return (X.rowwise() - mean_.transpose()).array().rowwise() / scale_.transpose().array();
}

nlohmann::json Standardizer::to_json() const {
  return {{"kind", "std"}, {"mean", vec_json(mean_)}, {"scale", vec_json(scale_)}};
}

MinMaxScaler MinMaxScaler::fit(const Matrix& X) {
  return {X.colwise().minCoeff().transpose(), X.colwise().maxCoeff().transpose()};
}

Matrix MinMaxScaler::apply(const Matrix& X) const {
  check_cols(X, min_.size(), "min-max");
  Matrix out(X.rows(), X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const double span = max_(c) - min_(c);
    if (span > 0.0) {
      out.col(c) = (X.col(c).array() - min_(c)) / span;
    } else {
      out.col(c).setZero();
    }
  }
  return out;
}

nlohmann::json MinMaxScaler::to_json() const {
  return {{"kind", "minmax"}, {"min", vec_json(min_)}, {"max", vec_json(max_)}};
}

VarianceThreshold VarianceThreshold::fit(const Matrix& X, double tau) {
  const Vector var = column_variance(X);
  std::vector<std::size_t> kept;
  for (Eigen::Index c = 0; c < var.size(); ++c) {
    if (var(c) > tau) kept.push_back(static_cast<std::size_t>(c));
  }
  if (kept.empty()) fail(ErrorCode::InvalidArgument, "variance threshold removes every column");
  return {tau, std::move(kept), static_cast<std::size_t>(X.cols())};
}

Matrix VarianceThreshold::apply(const Matrix& X) const {
  check_cols(X, static_cast<Eigen::Index>(input_dim_), "variance threshold");
  Matrix out(X.rows(), static_cast<Eigen::Index>(kept_.size()));
  for (std::size_t i = 0; i < kept_.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = X.col(static_cast<Eigen::Index>(kept_[i]));
  return out;
}

nlohmann::json VarianceThreshold::to_json() const {
  return {{"kind", "vt"}, {"tau", tau_}, {"kept", kept_}, {"input_dim", input_dim_}};
}

Pca Pca::fit(const Matrix& X, const TransformSpec& spec) {
  if (X.rows() < 2) fail(ErrorCode::InvalidArgument, "PCA needs at least two rows");
  Vector mean = X.colwise().mean().transpose();
  const Matrix centered = X.rowwise() - mean.transpose();
  const Matrix cov = (centered.transpose() * centered) / static_cast<double>(X.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success) fail(ErrorCode::InvalidArgument, "PCA eigendecomposition failed");
  // Eigen returns ascending eigenvalues; reverse to descending.
  const Eigen::Index d = cov.rows();
  Vector eig(d);
  Matrix vecs(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    eig(i) = std::max(0.0, solver.eigenvalues()(d - 1 - i));
    vecs.col(i) = solver.eigenvectors().col(d - 1 - i);
    // Sign convention: largest-magnitude loading is positive.
    Eigen::Index arg = 0;
    vecs.col(i).cwiseAbs().maxCoeff(&arg);
    if (vecs(arg, i) < 0.0) vecs.col(i) = -vecs.col(i);
  }

  Eigen::Index keep = d;
  if (spec.components > 0) {
    keep = std::min<Eigen::Index>(spec.components, d);
  } else {
    const double total = eig.sum();
    if (total > 0.0) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) {
        acc += eig(i);
        if (acc / total >= spec.variance_target - 1e-12) {
          keep = i + 1;
          break;
        }
      }
    } else {
      keep = 1;
    }
  }
  return {std::move(mean), vecs.leftCols(keep), std::move(eig)};
}

Matrix Pca::apply(const Matrix& X) const {
  check_cols(X, mean_.size(), "PCA");
  return (X.rowwise() - mean_.transpose()) * components_;
}

Matrix Pca::reconstruct(const Matrix& Z) const {
  return (Z * components_.transpose()).rowwise() + mean_.transpose();
}

double Pca::explained_variance_ratio() const {
  const double total = eigenvalues_.sum();
  if (!(total > 0.0)) return 1.0;
  return eigenvalues_.head(components_.cols()).sum() / total;
}

nlohmann::json Pca::to_json() const {
  return {{"kind", "pca"}, {"mean", vec_json(mean_)}, {"components", mat_json(components_)},
          {"eigenvalues", vec_json(eigenvalues_)}};
}

std::unique_ptr<Transform> fit_transform(const TransformSpec& spec, const Matrix& X) {
  switch (spec.kind) {
    case TransformKind::Normalizer: return std::make_unique<Normalizer>();
    case TransformKind::Standardizer: return std::make_unique<Standardizer>(Standardizer::fit(X));
    case TransformKind::MinMax: return std::make_unique<MinMaxScaler>(MinMaxScaler::fit(X));
    case TransformKind::VarianceThreshold:
      return std::make_unique<VarianceThreshold>(VarianceThreshold::fit(X, spec.tau));
    case TransformKind::Pca: return std::make_unique<Pca>(Pca::fit(X, spec));
  }
  fail(ErrorCode::InvalidArgument, "unknown transform kind");
}

std::unique_ptr<Transform> transform_from_json(const nlohmann::json& j) {
  switch (parse_transform(j.at("kind").get<std::string>())) {
    case TransformKind::Normalizer: return std::make_unique<Normalizer>();
    case TransformKind::Standardizer:
      return std::make_unique<Standardizer>(json_vec(j.at("mean")), json_vec(j.at("scale")));
    case TransformKind::MinMax: return std::make_unique<MinMaxScaler>(json_vec(j.at("min")), json_vec(j.at("max")));
    case TransformKind::VarianceThreshold:
      return std::make_unique<VarianceThreshold>(j.at("tau").get<double>(), j.at("kept").get<std::vector<std::size_t>>(),
                                                 j.at("input_dim").get<std::size_t>());
    case TransformKind::Pca:
      return std::make_unique<Pca>(json_vec(j.at("mean")), json_mat(j.at("components")), json_vec(j.at("eigenvalues")));
  }
  fail(ErrorCode::InvalidArgument, "unknown transform kind");
}

}  // namespace phyto::learn
