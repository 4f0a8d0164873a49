#include "phyto/learn/pipeline.hpp"

#include <algorithm>

#include "phyto/csv.hpp"
#include "phyto/error.hpp"

namespace phyto::learn {

Label minority_label(const std::vector<Label>& y) {
  const auto ones = std::count(y.begin(), y.end(), 1);
  const auto zeros = static_cast<std::ptrdiff_t>(y.size()) - ones;
  return ones <= zeros ? 1 : 0;
}

TrainedPipeline::TrainedPipeline(PipelineSpec spec, std::vector<std::unique_ptr<Transform>> chain,
                                 std::unique_ptr<Classifier> model, Label minority, Eigen::Index input_dim)
    : spec_(std::move(spec)),
      chain_(std::move(chain)),
      model_(std::move(model)),
      minority_(minority),
      input_dim_(input_dim) {}

void TrainedPipeline::check_input(const Matrix& X) const {
  if (X.cols() != input_dim_) {
    fail(ErrorCode::DimensionMismatch,
         "pipeline expects " + std::to_string(input_dim_) + " columns, got " + std::to_string(X.cols()));
  }
}

Matrix TrainedPipeline::transform(const Matrix& X) const {
  check_input(X);
  Matrix cur = X;
  for (const auto& t : chain_) cur = t->apply(cur);
  return cur;
}

std::vector<Label> TrainedPipeline::predict(const Matrix& X) const { return model_->predict(transform(X)); }

Vector TrainedPipeline::predict_score(const Matrix& X) const {
  Vector s = model_->positive_score(transform(X));
  if (minority_ == 0) s = (1.0 - s.array()).matrix();
  return s;
}

nlohmann::json TrainedPipeline::to_json() const {
  nlohmann::json chain = nlohmann::json::array();
  for (const auto& t : chain_) chain.push_back(t->to_json());
  return {{"format", "phyto-pipeline"},
          {"version", kModelFormatVersion},
          {"spec", learn::to_json(spec_)},
          {"input_dim", input_dim_},
          {"minority_label", minority_},
          {"chain", chain},
          {"classifier", model_->to_json()}};
}

TrainedPipeline TrainedPipeline::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "phyto-pipeline") fail(ErrorCode::ConfigError, "not a pipeline model file");
  if (j.value("version", 0) != kModelFormatVersion) {
    fail(ErrorCode::ConfigError, "unsupported model format version " + std::to_string(j.value("version", 0)));
  }
  std::vector<std::unique_ptr<Transform>> chain;
  for (const auto& t : j.at("chain")) chain.push_back(transform_from_json(t));
  return TrainedPipeline(pipeline_spec_from_json(j.at("spec")), std::move(chain),
                         classifier_from_json(j.at("classifier")), j.at("minority_label").get<Label>(),
                         j.at("input_dim").get<Eigen::Index>());
}

void TrainedPipeline::save(const std::filesystem::path& path) const { csv::write_file(path, to_json().dump() + "\n"); }

TrainedPipeline TrainedPipeline::load(const std::filesystem::path& path) {
  return from_json(nlohmann::json::parse(csv::read_file(path)));
}

TrainedPipeline fit(const PipelineSpec& spec, const Matrix& X, const std::vector<Label>& y) {
  validate_training_data(X, y);
  std::vector<std::unique_ptr<Transform>> chain;
  Matrix cur = X;
  for (const auto& ts : spec.transforms) {
    chain.push_back(fit_transform(ts, cur));
    cur = chain.back()->apply(cur);
  }
  if (!cur.allFinite()) fail(ErrorCode::NonFiniteInput, "transform chain produced non-finite values");
  auto model = fit_classifier(spec.classifier, cur, y);
  return TrainedPipeline(spec, std::move(chain), std::move(model), minority_label(y), X.cols());
}

}  // namespace phyto::learn
