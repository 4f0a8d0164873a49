#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include <json.hpp>

#include "phyto/learn/models.hpp"
#include "phyto/learn/spec.hpp"
#include "phyto/learn/transforms.hpp"

namespace phyto::learn {

inline constexpr int kModelFormatVersion = 1;

/// A fitted transform chain plus classifier. Raw feature rows go in; the
/// chain is applied in fit order.
class TrainedPipeline {
 public:
  TrainedPipeline() = default;
  TrainedPipeline(PipelineSpec spec, std::vector<std::unique_ptr<Transform>> chain,
                  std::unique_ptr<Classifier> model, Label minority, Eigen::Index input_dim);

  const PipelineSpec& spec() const { return spec_; }
  Label minority_label() const { return minority_; }
  Eigen::Index input_dim() const { return input_dim_; }
  const Classifier& classifier() const { return *model_; }
  const std::vector<std::unique_ptr<Transform>>& chain() const { return chain_; }

  Matrix transform(const Matrix& X) const;
  std::vector<Label> predict(const Matrix& X) const;
  /// Score for the minority class of the training labels, higher = more confident.
  Vector predict_score(const Matrix& X) const;

  nlohmann::json to_json() const;
  static TrainedPipeline from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static TrainedPipeline load(const std::filesystem::path& path);

 private:
  void check_input(const Matrix& X) const;

  PipelineSpec spec_;
  std::vector<std::unique_ptr<Transform>> chain_;
  std::unique_ptr<Classifier> model_;
  Label minority_ = 1;
  Eigen::Index input_dim_ = 0;
};

TrainedPipeline fit(const PipelineSpec& spec, const Matrix& X, const std::vector<Label>& y);
inline TrainedPipeline fit(const ClassifierSpec& spec, const Matrix& X, const std::vector<Label>& y) {
  return fit(PipelineSpec{{}, spec}, X, y);
}

/// Minority label of a label vector (label 1 on ties).
Label minority_label(const std::vector<Label>& y);

}  // namespace phyto::learn
