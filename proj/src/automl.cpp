#include "phyto/automl.hpp"

#include <algorithm>
#include <chrono>
#include <tuple>

#include "phyto/error.hpp"
#include "phyto/eval.hpp"
#include "phyto/resample.hpp"
#include "phyto/rng.hpp"

namespace phyto::automl {

using learn::ClassifierKind;
using learn::TransformKind;

SearchSpace SearchSpace::full() {
  SearchSpace s;
  s.scalings = {{}, {TransformKind::Normalizer}, {TransformKind::Standardizer}, {TransformKind::MinMax}};
  s.feature_stages = {{}, {TransformKind::VarianceThreshold}, {TransformKind::Pca},
                      {TransformKind::VarianceThreshold, TransformKind::Pca}};
  s.classifiers.assign(learn::kAllClassifiers.begin(), learn::kAllClassifiers.end());
  return s;
}

namespace {

constexpr std::uint64_t kClassifierStream = 0xc1a5;
constexpr std::uint64_t kDrawStream = 0xd4a3;

learn::PipelineSpec make_spec(const SlotOption& scaling, const SlotOption& feature, learn::ClassifierSpec clf) {
  learn::PipelineSpec spec;
  for (auto k : scaling) spec.transforms.push_back(learn::TransformSpec::defaults(k));
  for (auto k : feature) spec.transforms.push_back(learn::TransformSpec::defaults(k));
  spec.classifier = std::move(clf);
  return spec;
}

const char* phase_name(Phase p) { return p == Phase::Default ? "a" : "b"; }

}  // namespace

std::vector<learn::PipelineSpec> enumerate_defaults(const SearchSpace& space, std::uint64_t classifier_seed) {
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>> keys;
  for (std::size_t s = 0; s < space.scalings.size(); ++s) {
    for (std::size_t f = 0; f < space.feature_stages.size(); ++f) {
      for (std::size_t c = 0; c < space.classifiers.size(); ++c) {
        keys.emplace_back(space.scalings[s].size() + space.feature_stages[f].size(), s, f, c);
      }
    }
  }
  std::sort(keys.begin(), keys.end());
  std::vector<learn::PipelineSpec> out;
  out.reserve(keys.size());
  for (const auto& [stages, s, f, c] : keys) {
    out.push_back(make_spec(space.scalings[s], space.feature_stages[f],
                            learn::ClassifierSpec::defaults(space.classifiers[c], classifier_seed)));
  }
  return out;
}

SearchTrace run_search(const CandidateEvaluator& evaluate, const SearchOptions& opts) {
  if (opts.budget < 1) fail(ErrorCode::InvalidArgument, "search budget must be at least 1");
  SearchTrace trace;
  double best = 0.0;
  bool have_best = false;

  auto record = [&](Phase phase, std::size_t index, learn::PipelineSpec spec) -> bool {
    TraceEntry e;
    e.phase = phase;
    e.index = index;
    e.spec = std::move(spec);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      e.val_macro_f1 = evaluate(e.spec);
    } catch (const Error& err) {
      e.discard_reason = std::string(to_string(err.code())) + ": " + err.what();
    }
    e.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    bool improved = false;
    if (e.val_macro_f1) {
      const double v = *e.val_macro_f1;
      // Phase a compares strictly so the earlier candidate in slot order wins ties.
      if (!have_best || v > best + (phase == Phase::Random ? kImprovementEpsilon : 0.0)) {
        best = v;
        have_best = true;
        improved = true;
        trace.best_index = trace.entries.size();
      }
    }
    e.best_so_far = have_best ? best : 0.0;
    trace.entries.push_back(std::move(e));
    return improved;
  };

  const std::uint64_t clf_seed = mix_seed(opts.seed, kClassifierStream);
  const auto defaults = enumerate_defaults(opts.space, clf_seed);
  for (std::size_t i = 0; i < defaults.size(); ++i) {
    record(Phase::Default, i, defaults[i]);
    if (trace.entries.back().val_macro_f1) {
      ++trace.phase_a_evaluations;
    } else {
      ++trace.phase_a_discards;
    }
  }
  if (!have_best) fail(ErrorCode::NoValidCandidate, "every candidate pipeline was discarded");

  const learn::PipelineSpec winner = trace.best().spec;
  Rng rng = make_rng(opts.seed, kDrawStream);
  std::size_t stale = 0;
  for (std::size_t d = 0; d < opts.budget; ++d) {
    learn::PipelineSpec draw;
    for (const auto& t : winner.transforms) draw.transforms.push_back(learn::sample_transform(t.kind, rng));
    draw.classifier = learn::sample_classifier(winner.classifier.kind, rng, mix_seed(clf_seed, d + 1));
    ++trace.phase_b_draws;
    if (record(Phase::Random, d, std::move(draw))) {
      stale = 0;
    } else if (++stale >= opts.patience) {
      trace.stopped_early = d + 1 < opts.budget;
      break;
    }
  }
  return trace;
}

nlohmann::json SearchTrace::summary_json() const {
  const auto& b = best();
  return {{"best_pipeline", b.spec.describe()},
          {"best_spec", learn::to_json(b.spec)},
          {"best_val_macro_f1", b.val_macro_f1.value_or(0.0)},
          {"best_phase", phase_name(b.phase)},
          {"phase_a_evaluations", phase_a_evaluations},
          {"phase_a_discards", phase_a_discards},
          {"phase_b_draws", phase_b_draws},
          {"stopped_early", stopped_early}};
}

std::string SearchTrace::to_jsonl(bool with_timing) const {
  std::string out;
  for (const auto& e : entries) {
    nlohmann::json j = {{"phase", phase_name(e.phase)},
                        {"index", e.index},
                        {"candidate", e.spec.describe()},
                        {"spec", learn::to_json(e.spec)},
                        {"best_so_far", e.best_so_far}};
    if (e.val_macro_f1) {
      j["val_macro_f1"] = *e.val_macro_f1;
    } else {
      j["val_macro_f1"] = nullptr;
      j["discarded"] = e.discard_reason;
    }
    if (with_timing) j["wall_ms"] = e.wall_ms;
    out += j.dump() + '\n';
  }
  return out;
}

SearchResult search(const Matrix& X_train, const std::vector<Label>& y_train, const SearchOptions& opts) {
  learn::validate_training_data(X_train, y_train);
  const auto split = eval::stratified_shuffle_splits(y_train, 1, opts.validation_fraction, mix_seed(opts.seed, 1))[0];
  auto rows = [&](const std::vector<std::size_t>& idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), X_train.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X_train.row(static_cast<Eigen::Index>(idx[i]));
    return out;
  };
  auto labels = [&](const std::vector<std::size_t>& idx) {
    std::vector<Label> out;
    for (auto i : idx) out.push_back(y_train[i]);
    return out;
  };
  Matrix X_fit = rows(split.train);
  std::vector<Label> y_fit = labels(split.train);
  const Matrix X_val = rows(split.val);
  const std::vector<Label> y_val = labels(split.val);
  if (opts.smote) {
    auto balanced = resample::smote(X_fit, y_fit, {opts.smote_k, mix_seed(opts.seed, 2)});
    X_fit = std::move(balanced.X);
    y_fit = std::move(balanced.y);
  }

  const CandidateEvaluator evaluate = [&](const learn::PipelineSpec& spec) {
    const auto model = learn::fit(spec, X_fit, y_fit);
    return eval::macro_f1(y_val, model.predict(X_val));
  };
  SearchTrace trace = run_search(evaluate, opts);

  Matrix X_all = X_train;
  std::vector<Label> y_all = y_train;
  if (opts.smote) {
    auto balanced = resample::smote(X_all, y_all, {opts.smote_k, mix_seed(opts.seed, 3)});
    X_all = std::move(balanced.X);
    y_all = std::move(balanced.y);
  }
  auto pipeline = learn::fit(trace.best().spec, X_all, y_all);
  return {std::move(pipeline), std::move(trace)};
}

}  // namespace phyto::automl
