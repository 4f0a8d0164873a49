#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "phyto/rng.hpp"

namespace phyto::learn {

enum class ClassifierKind { GaussianNB, QDA, KNN, LinearSVM, DecisionTree, RandomForest, ExtraTrees, MLP };

inline constexpr std::array<ClassifierKind, 8> kAllClassifiers = {
    ClassifierKind::GaussianNB,   ClassifierKind::QDA,          ClassifierKind::KNN,
    ClassifierKind::LinearSVM,    ClassifierKind::DecisionTree, ClassifierKind::RandomForest,
    ClassifierKind::ExtraTrees,   ClassifierKind::MLP};

/// Short names used in configs and reports: gnb, qda, knn, svm, dt, rf, etc, mlp.
std::string_view to_string(ClassifierKind k);
ClassifierKind parse_classifier(std::string_view s);

struct NaiveBayesParams {
  double var_floor = 1e-9;
};

struct QdaParams {
  /// Ridge added to each class covariance: scale * trace(cov) / d.
  double ridge_scale = 1e-6;
};

struct KnnParams {
  int k = 5;
};

struct SvmParams {
  double c = 1.0;
  int epochs = 100;
};

/// Shared by the single tree and both ensembles. max_depth 0 means unlimited.
struct TreeParams {
  int trees = 256;
  int max_depth = 0;
  int min_leaf = 1;
};

struct MlpParams {
  std::vector<int> hidden = {50, 50, 25};
  double step = 1e-3;
  int batch = 32;
  double l2 = 1e-4;
  int max_epochs = 500;
  /// Epochs without validation-loss improvement before the step is halved.
  int patience = 10;
  int max_halvings = 3;
};

using ClassifierParams = std::variant<NaiveBayesParams, QdaParams, KnnParams, SvmParams, TreeParams, MlpParams>;

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::RandomForest;
  ClassifierParams params = TreeParams{};
  std::uint64_t seed = 0;

  static ClassifierSpec defaults(ClassifierKind kind, std::uint64_t seed = 0);
};

enum class TransformKind { Normalizer, Standardizer, MinMax, VarianceThreshold, Pca };

/// Short names: nor, std, minmax, vt, pca.
std::string_view to_string(TransformKind k);
TransformKind parse_transform(std::string_view s);

struct TransformSpec {
  TransformKind kind = TransformKind::Normalizer;
  /// VarianceThreshold: columns with variance <= tau are dropped.
  double tau = 0.0;
  /// Pca: keep the fewest components reaching this explained-variance ratio,
  /// unless `components` > 0 fixes the count.
  double variance_target = 0.95;
  int components = 0;

  static TransformSpec defaults(TransformKind kind) { return TransformSpec{kind}; }
};

struct PipelineSpec {
  std::vector<TransformSpec> transforms;
  ClassifierSpec classifier;

  /// Human-readable chain such as "vt + pca + etc".
  std::string describe() const;
};

nlohmann::json to_json(const ClassifierSpec& s);
ClassifierSpec classifier_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TransformSpec& s);
TransformSpec transform_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineSpec& s);
PipelineSpec pipeline_spec_from_json(const nlohmann::json& j);

/// Random draws from the per-kind hyperparameter schemas used by the search.
ClassifierSpec sample_classifier(ClassifierKind kind, Rng& rng, std::uint64_t seed);
TransformSpec sample_transform(TransformKind kind, Rng& rng);

}  // namespace phyto::learn
