#include "phyto/learn/spec.hpp"

#include <cmath>

#include "phyto/error.hpp"

namespace phyto::learn {

namespace {
constexpr std::array<std::string_view, 8> kClassifierNames = {"gnb", "qda", "knn", "svm", "dt", "rf", "etc", "mlp"};
constexpr std::array<std::string_view, 5> kTransformNames = {"nor", "std", "minmax", "vt", "pca"};

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(std::log(lo) + uniform01(rng) * (std::log(hi) - std::log(lo)));
}

int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

std::string_view to_string(ClassifierKind k) { return kClassifierNames[static_cast<std::size_t>(k)]; }

ClassifierKind parse_classifier(std::string_view s) {
  for (std::size_t i = 0; i < kClassifierNames.size(); ++i) {
    if (kClassifierNames[i] == s) return static_cast<ClassifierKind>(i);
  }
  fail(ErrorCode::InvalidArgument, "unknown classifier '" + std::string(s) + "'");
}

std::string_view to_string(TransformKind k) { return kTransformNames[static_cast<std::size_t>(k)]; }

TransformKind parse_transform(std::string_view s) {
  for (std::size_t i = 0; i < kTransformNames.size(); ++i) {
    if (kTransformNames[i] == s) return static_cast<TransformKind>(i);
  }
  fail(ErrorCode::InvalidArgument, "unknown transform '" + std::string(s) + "'");
}

ClassifierSpec ClassifierSpec::defaults(ClassifierKind kind, std::uint64_t seed) {
  ClassifierSpec s;
  s.kind = kind;
  s.seed = seed;
  switch (kind) {
    case ClassifierKind::GaussianNB: s.params = NaiveBayesParams{}; break;
    case ClassifierKind::QDA: s.params = QdaParams{}; break;
    case ClassifierKind::KNN: s.params = KnnParams{}; break;
    case ClassifierKind::LinearSVM: s.params = SvmParams{}; break;
    case ClassifierKind::DecisionTree: s.params = TreeParams{1, 0, 1}; break;
    case ClassifierKind::RandomForest:
    case ClassifierKind::ExtraTrees: s.params = TreeParams{}; break;
    case ClassifierKind::MLP: s.params = MlpParams{}; break;
  }
  return s;
}

std::string PipelineSpec::describe() const {
  std::string out;
  for (const auto& t : transforms) {
    out += to_string(t.kind);
    out += " + ";
  }
  out += to_string(classifier.kind);
  return out;
}

nlohmann::json to_json(const ClassifierSpec& s) {
  nlohmann::json j;
  j["kind"] = to_string(s.kind);
  j["seed"] = s.seed;
  std::visit(overloaded{
                 [&](const NaiveBayesParams& p) { j["var_floor"] = p.var_floor; },
                 [&](const QdaParams& p) { j["ridge_scale"] = p.ridge_scale; },
                 [&](const KnnParams& p) { j["k"] = p.k; },
                 [&](const SvmParams& p) {
                   j["c"] = p.c;
                   j["epochs"] = p.epochs;
                 },
                 [&](const TreeParams& p) {
                   j["trees"] = p.trees;
                   j["max_depth"] = p.max_depth;
                   j["min_leaf"] = p.min_leaf;
                 },
                 [&](const MlpParams& p) {
                   j["hidden"] = p.hidden;
                   j["step"] = p.step;
                   j["batch"] = p.batch;
                   j["l2"] = p.l2;
                   j["max_epochs"] = p.max_epochs;
                   j["patience"] = p.patience;
                   j["max_halvings"] = p.max_halvings;
                 },
             },
             s.params);
  return j;
}

ClassifierSpec classifier_spec_from_json(const nlohmann::json& j) {
  ClassifierSpec s = ClassifierSpec::defaults(parse_classifier(j.at("kind").get<std::string>()),
                                              j.value("seed", std::uint64_t{0}));
  std::visit(overloaded{
                 [&](NaiveBayesParams& p) { p.var_floor = j.value("var_floor", p.var_floor); },
                 [&](QdaParams& p) { p.ridge_scale = j.value("ridge_scale", p.ridge_scale); },
                 [&](KnnParams& p) { p.k = j.value("k", p.k); },
                 [&](SvmParams& p) {
                   p.c = j.value("c", p.c);
                   p.epochs = j.value("epochs", p.epochs);
                 },
                 [&](TreeParams& p) {
                   p.trees = j.value("trees", p.trees);
                   p.max_depth = j.value("max_depth", p.max_depth);
                   p.min_leaf = j.value("min_leaf", p.min_leaf);
                 },
                 [&](MlpParams& p) {
                   p.hidden = j.value("hidden", p.hidden);
                   p.step = j.value("step", p.step);
                   p.batch = j.value("batch", p.batch);
                   p.l2 = j.value("l2", p.l2);
                   p.max_epochs = j.value("max_epochs", p.max_epochs);
                   p.patience = j.value("patience", p.patience);
                   p.max_halvings = j.value("max_halvings", p.max_halvings);
                 },
             },
             s.params);
  return s;
}

nlohmann::json to_json(const TransformSpec& s) {
  nlohmann::json j;
  j["kind"] = to_string(s.kind);
  if (s.kind == TransformKind::VarianceThreshold) j["tau"] = s.tau;
  if (s.kind == TransformKind::Pca) {
    j["variance_target"] = s.variance_target;
    j["components"] = s.components;
  }
  return j;
}

TransformSpec transform_spec_from_json(const nlohmann::json& j) {
  TransformSpec s = TransformSpec::defaults(parse_transform(j.at("kind").get<std::string>()));
  s.tau = j.value("tau", s.tau);
  s.variance_target = j.value("variance_target", s.variance_target);
  s.components = j.value("components", s.components);
  return s;
}

nlohmann::json to_json(const PipelineSpec& s) {
  nlohmann::json t = nlohmann::json::array();
  for (const auto& x : s.transforms) t.push_back(to_json(x));
  return {{"transforms", t}, {"classifier", to_json(s.classifier)}};
}

PipelineSpec pipeline_spec_from_json(const nlohmann::json& j) {
  PipelineSpec s;
  for (const auto& t : j.at("transforms")) s.transforms.push_back(transform_spec_from_json(t));
  s.classifier = classifier_spec_from_json(j.at("classifier"));
  return s;
}

ClassifierSpec sample_classifier(ClassifierKind kind, Rng& rng, std::uint64_t seed) {
  ClassifierSpec s = ClassifierSpec::defaults(kind, seed);
  switch (kind) {
    case ClassifierKind::GaussianNB: s.params = NaiveBayesParams{log_uniform(rng, 1e-12, 1e-6)}; break;
    case ClassifierKind::QDA: s.params = QdaParams{log_uniform(rng, 1e-8, 1e-2)}; break;
    case ClassifierKind::KNN: s.params = KnnParams{2 * uniform_int(rng, 0, 15) + 1}; break;
    case ClassifierKind::LinearSVM: {
      SvmParams p;
      p.c = log_uniform(rng, 1e-3, 1e3);
      s.params = p;
      break;
    }
    case ClassifierKind::DecisionTree:
    case ClassifierKind::RandomForest:
    case ClassifierKind::ExtraTrees: {
      TreeParams p;
      p.trees = kind == ClassifierKind::DecisionTree ? 1 : uniform_int(rng, 16, 512);
      // max_depth is drawn from {unlimited, 4, ..., 32}.
      const int depth_choice = uniform_int(rng, 3, 32);
      p.max_depth = depth_choice == 3 ? 0 : depth_choice;
      p.min_leaf = uniform_int(rng, 1, 8);
      s.params = p;
      break;
    }
    case ClassifierKind::MLP: {
      MlpParams p;
      const int layers = uniform_int(rng, 1, 3);
      p.hidden.clear();
      for (int l = 0; l < layers; ++l) {
        constexpr std::array<int, 3> widths = {25, 50, 100};
        p.hidden.push_back(widths[uniform_index(rng, widths.size())]);
      }
      p.step = log_uniform(rng, 1e-4, 1e-2);
      s.params = p;
      break;
    }
  }
  return s;
}

TransformSpec sample_transform(TransformKind kind, Rng& rng) {
  TransformSpec s = TransformSpec::defaults(kind);
  if (kind == TransformKind::VarianceThreshold) s.tau = uniform01(rng) * 1e-3;
  if (kind == TransformKind::Pca) s.variance_target = 0.8 + uniform01(rng) * (0.999 - 0.8);
  return s;
}

}  // namespace phyto::learn
