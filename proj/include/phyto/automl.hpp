#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "phyto/learn/pipeline.hpp"

namespace phyto::automl {

/// Transforms of one slot option; empty = no stage.
using SlotOption = std::vector<learn::TransformKind>;

struct SearchSpace {
  std::vector<SlotOption> scalings;
  std::vector<SlotOption> feature_stages;
  std::vector<learn::ClassifierKind> classifiers;

  /// {none, nor, std, minmax} x {none, vt, pca, vt + pca} x all classifiers.
  static SearchSpace full();
  std::size_t combination_count() const {
    return scalings.size() * feature_stages.size() * classifiers.size();
  }
};

struct SearchOptions {
  std::size_t budget = 1024;
  std::size_t patience = 100;
  std::uint64_t seed = 0;
  double validation_fraction = 0.2;
  bool smote = true;
  std::size_t smote_k = 5;
  SearchSpace space = SearchSpace::full();
};

inline constexpr double kImprovementEpsilon = 1e-12;

enum class Phase { Default, Random };

struct TraceEntry {
  Phase phase = Phase::Default;
  std::size_t index = 0;  ///< position within its phase
  learn::PipelineSpec spec;
  std::optional<double> val_macro_f1;  ///< empty when discarded
  std::string discard_reason;
  double wall_ms = 0.0;
  double best_so_far = 0.0;
};

struct SearchTrace {
  std::vector<TraceEntry> entries;
  std::size_t phase_a_evaluations = 0;
  std::size_t phase_a_discards = 0;
  std::size_t phase_b_draws = 0;
  bool stopped_early = false;
  std::size_t best_index = 0;  ///< into entries

  const TraceEntry& best() const { return entries.at(best_index); }
  nlohmann::json summary_json() const;
  /// One JSON object per line. Timing is included only on request so the
  /// default output is reproducible byte for byte.
  std::string to_jsonl(bool with_timing = false) const;
};

/// Scores one candidate; throws phyto::Error to discard it.
using CandidateEvaluator = std::function<double(const learn::PipelineSpec&)>;

/// Both search phases over an arbitrary evaluator.
SearchTrace run_search(const CandidateEvaluator& evaluate, const SearchOptions& opts);

/// The phase-a candidate list in evaluation order: by stage count, then scaling,
/// feature and classifier slot order. Classifiers carry `classifier_seed`.
std::vector<learn::PipelineSpec> enumerate_defaults(const SearchSpace& space, std::uint64_t classifier_seed);

struct SearchResult {
  learn::TrainedPipeline pipeline;
  SearchTrace trace;
};

/// Scores candidates on a fixed stratified validation hold-out of X_train
/// (training fold SMOTE-balanced), then refits the winner on all of X_train.
SearchResult search(const Matrix& X_train, const std::vector<Label>& y_train, const SearchOptions& opts);

}  // namespace phyto::automl
