#include "phyto/learn/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "json_util.hpp"
#include "phyto/error.hpp"
#include "phyto/learn/mlp.hpp"
#include "phyto/learn/tree.hpp"
#include "phyto/rng.hpp"

namespace phyto::learn {

using detail::json_mat;
using detail::json_vec;
using detail::mat_json;
using detail::vec_json;

std::vector<Label> Classifier::predict(const Matrix& X) const {
  const Vector s = positive_score(X);
  std::vector<Label> out(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) out[static_cast<std::size_t>(i)] = s(i) > 0.5 ? 1 : 0;
  return out;
}

void validate_training_data(const Matrix& X, const std::vector<Label>& y) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) fail(ErrorCode::LengthMismatch, "rows vs labels");
  if (!X.allFinite()) fail(ErrorCode::NonFiniteInput, "training matrix contains NaN or infinity");
  std::array<std::size_t, 2> counts{};
  for (Label l : y) {
    if (l != 0 && l != 1) fail(ErrorCode::InvalidArgument, "labels must be 0 or 1");
    ++counts[static_cast<std::size_t>(l)];
  }
  if (counts[0] == 0 || counts[1] == 0) fail(ErrorCode::SingleClassInput, "training data has one class");
  if (counts[0] < 2 || counts[1] < 2) fail(ErrorCode::ClassTooSmall, "each class needs at least two rows");
}

namespace {

void check_dim(const Matrix& X, Eigen::Index expected) {
  if (X.cols() != expected) {
    fail(ErrorCode::DimensionMismatch,
         "expected " + std::to_string(expected) + " columns, got " + std::to_string(X.cols()));
  }
}

std::array<std::vector<Eigen::Index>, 2> rows_by_class(const std::vector<Label>& y) {
  std::array<std::vector<Eigen::Index>, 2> out;
  for (std::size_t i = 0; i < y.size(); ++i) out[static_cast<std::size_t>(y[i])].push_back(static_cast<Eigen::Index>(i));
  return out;
}

/// P(label 1) from the two class log-joints, computed stably.
double posterior_from_logs(double log0, double log1) {
  const double d = log0 - log1;
  if (d >= 0.0) {
    const double e = std::exp(-d);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(d));
}

}  // namespace

// ---------------------------------------------------------------- naive Bayes

GaussianNaiveBayes GaussianNaiveBayes::fit(const Matrix& X, const std::vector<Label>& y, const NaiveBayesParams& p) {
  GaussianNaiveBayes m;
  const auto groups = rows_by_class(y);
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& rows = groups[c];
    Matrix sub(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
    m.means_[c] = sub.colwise().mean().transpose();
    m.vars_[c] = ((sub.rowwise() - m.means_[c].transpose()).array().square().colwise().sum() /
                  static_cast<double>(rows.size()))
                     .transpose()
                     .cwiseMax(p.var_floor);
    m.log_priors_[c] = std::log(static_cast<double>(rows.size()) / static_cast<double>(y.size()));
  }
  return m;
}

Vector GaussianNaiveBayes::positive_score(const Matrix& X) const {
  check_dim(X, input_dim());
  Vector out(X.rows());
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    std::array<double, 2> lj{};
    for (std::size_t c = 0; c < 2; ++c) {
      const auto diff = (X.row(r).transpose() - means_[c]).array();
      lj[c] = log_priors_[c] - 0.5 * ((2.0 * std::numbers::pi * vars_[c].array()).log().sum() +
                                      (diff.square() / vars_[c].array()).sum());
    }
    out(r) = posterior_from_logs(lj[0], lj[1]);
  }
  return out;
}

nlohmann::json GaussianNaiveBayes::to_json() const {
  return {{"kind", "gnb"},
          {"means", {vec_json(means_[0]), vec_json(means_[1])}},
          {"vars", {vec_json(vars_[0]), vec_json(vars_[1])}},
          {"log_priors", log_priors_}};
}

GaussianNaiveBayes GaussianNaiveBayes::from_json(const nlohmann::json& j) {
  GaussianNaiveBayes m;
  for (std::size_t c = 0; c < 2; ++c) {
    m.means_[c] = json_vec(j.at("means")[c]);
    m.vars_[c] = json_vec(j.at("vars")[c]);
  }
  m.log_priors_ = j.at("log_priors").get<std::array<double, 2>>();
  return m;
}

// ------------------------------------------------------------------------ QDA

Qda Qda::fit(const Matrix& X, const std::vector<Label>& y, const QdaParams& p) {
  Qda m;
  const auto groups = rows_by_class(y);
  const auto d = X.cols();
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& rows = groups[c];
    Matrix sub(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t i = 0; i < rows.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
    m.means_[c] = sub.colwise().mean().transpose();
    const Matrix centered = sub.rowwise() - m.means_[c].transpose();
    Matrix cov = centered.transpose() * centered / static_cast<double>(rows.size() - 1);
    const double ridge = p.ridge_scale * cov.trace() / static_cast<double>(d);
    cov.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) {
      fail(ErrorCode::SingularCovariance, "class " + std::to_string(c) + " covariance is not positive definite");
    }
    m.chol_lower_[c] = llt.matrixL();
    m.log_det_[c] = 2.0 * m.chol_lower_[c].diagonal().array().log().sum();
    if (!std::isfinite(m.log_det_[c])) {
      fail(ErrorCode::SingularCovariance, "class " + std::to_string(c) + " covariance is singular");
    }
    m.log_priors_[c] = std::log(static_cast<double>(rows.size()) / static_cast<double>(y.size()));
  }
  return m;
}

Vector Qda::log_joint(const Matrix& X, Label cls) const {
  const auto c = static_cast<std::size_t>(cls);
  const Matrix centered = (X.rowwise() - means_[c].transpose()).transpose();
  const Matrix solved = chol_lower_[c].triangularView<Eigen::Lower>().solve(centered);
  const double d = static_cast<double>(means_[c].size());
  Vector out = -0.5 * solved.colwise().squaredNorm().transpose();
  out.array() += log_priors_[c] - 0.5 * (log_det_[c] + d * std::log(2.0 * std::numbers::pi));
  return out;
}

Vector Qda::positive_score(const Matrix& X) const {
  check_dim(X, input_dim());
  const Vector l0 = log_joint(X, 0);
  const Vector l1 = log_joint(X, 1);
  Vector out(X.rows());
  for (Eigen::Index r = 0; r < X.rows(); ++r) out(r) = posterior_from_logs(l0(r), l1(r));
  return out;
}

nlohmann::json Qda::to_json() const {
  return {{"kind", "qda"},
          {"means", {vec_json(means_[0]), vec_json(means_[1])}},
          {"chol_lower", {mat_json(chol_lower_[0]), mat_json(chol_lower_[1])}},
          {"log_det", log_det_},
          {"log_priors", log_priors_}};
}

Qda Qda::from_json(const nlohmann::json& j) {
  Qda m;
  for (std::size_t c = 0; c < 2; ++c) {
    m.means_[c] = json_vec(j.at("means")[c]);
    m.chol_lower_[c] = json_mat(j.at("chol_lower")[c]);
  }
  m.log_det_ = j.at("log_det").get<std::array<double, 2>>();
  m.log_priors_ = j.at("log_priors").get<std::array<double, 2>>();
  return m;
}

// ------------------------------------------------------------------------ KNN

Knn Knn::fit(const Matrix& X, const std::vector<Label>& y, const KnnParams& p) {
  Knn m;
  m.X_ = X;
  m.y_ = y;
  int k = std::max(1, p.k);
  if (k % 2 == 0) ++k;
  const int n = static_cast<int>(X.rows());
  if (k > n) k = n % 2 == 1 ? n : n - 1;
  m.k_ = k;
  return m;
}

Vector Knn::positive_score(const Matrix& X) const {
  check_dim(X, input_dim());
  Vector out(X.rows());
  std::vector<std::pair<double, std::size_t>> dist(static_cast<std::size_t>(X_.rows()));
  const auto k = static_cast<std::size_t>(k_);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    for (Eigen::Index t = 0; t < X_.rows(); ++t) {
      dist[static_cast<std::size_t>(t)] = {(X_.row(t) - X.row(r)).squaredNorm(), static_cast<std::size_t>(t)};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    int pos = 0;
    for (std::size_t i = 0; i < k; ++i) pos += y_[dist[i].second];
    out(r) = static_cast<double>(pos) / static_cast<double>(k);
  }
  return out;
}

nlohmann::json Knn::to_json() const { return {{"kind", "knn"}, {"k", k_}, {"X", mat_json(X_)}, {"y", y_}}; }

Knn Knn::from_json(const nlohmann::json& j) {
  Knn m;
  m.k_ = j.at("k").get<int>();
  m.X_ = json_mat(j.at("X"));
  m.y_ = j.at("y").get<std::vector<Label>>();
  return m;
}

// ------------------------------------------------------------------------ SVM

namespace {

/// Logistic link P(1 | m) = 1 / (1 + exp(a m + b)) fitted by Newton's method
/// with backtracking on regularized targets (Lin, Lin & Weng formulation).
std::pair<double, double> fit_platt(const Vector& margins, const std::vector<Label>& y) {
  const auto n = static_cast<std::size_t>(margins.size());
  double prior1 = 0.0;
  for (Label l : y) prior1 += l;
  const double prior0 = static_cast<double>(n) - prior1;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo = 1.0 / (prior0 + 2.0);
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = y[i] == 1 ? hi : lo;

  double a = 0.0;
  double b = std::log((prior0 + 1.0) / (prior1 + 1.0));
  auto objective = [&](double aa, double bb) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double fapb = margins(static_cast<Eigen::Index>(i)) * aa + bb;
      f += fapb >= 0.0 ? t[i] * fapb + std::log1p(std::exp(-fapb)) : (t[i] - 1.0) * fapb + std::log1p(std::exp(fapb));
    }
    return f;
  };
  double fval = objective(a, b);
  constexpr double sigma = 1e-12;
  for (int it = 0; it < 100; ++it) {
    double h11 = sigma, h22 = sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double m = margins(static_cast<Eigen::Index>(i));
      const double fapb = m * a + b;
      double p, q;
      if (fapb >= 0.0) {
        p = std::exp(-fapb) / (1.0 + std::exp(-fapb));
        q = 1.0 / (1.0 + std::exp(-fapb));
      } else {
        p = 1.0 / (1.0 + std::exp(fapb));
        q = std::exp(fapb) / (1.0 + std::exp(fapb));
      }
      const double d2 = p * q;
      h11 += m * m * d2;
      h22 += d2;
      h21 += m * d2;
      const double d1 = t[i] - p;
      g1 += m * d1;
      g2 += d1;
    }
    if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    bool moved = false;
    while (step >= 1e-10) {
      const double na = a + step * da;
      const double nb = b + step * db;
      const double nf = objective(na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        a = na;
        b = nb;
        fval = nf;
        moved = true;
        break;
      }
      step /= 2.0;
    }
    if (!moved) break;
  }
  return {a, b};
}

}  // namespace

LinearSvm LinearSvm::fit(const Matrix& X, const std::vector<Label>& y, const SvmParams& p, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto d = X.cols();
  const double lambda = 1.0 / (p.c * static_cast<double>(n));
  const double radius = 1.0 / std::sqrt(lambda);

  // Bias handled as an extra constant feature.
  Vector w = Vector::Zero(d + 1);
  Vector avg = Vector::Zero(d + 1);
  std::size_t averaged = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, 0x5f3);
  std::size_t t = 0;
  const int epochs = std::max(1, p.epochs);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    for (std::size_t idx : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double yi = y[idx] == 1 ? 1.0 : -1.0;
      const auto row = X.row(static_cast<Eigen::Index>(idx));
      const double score = row.dot(w.head(d)) + w(d);
      w *= (1.0 - eta * lambda);
      if (yi * score < 1.0) {
        w.head(d) += eta * yi * row.transpose();
        w(d) += eta * yi;
      }
      const double norm = w.norm();
      if (norm > radius) w *= radius / norm;
      if (epoch == epochs - 1) {
        avg += w;
        ++averaged;
      }
    }
  }
  avg /= static_cast<double>(averaged);

  LinearSvm m;
  m.w_ = avg.head(d);
  m.bias_ = avg(d);
  const auto [a, b] = fit_platt(m.margin(X), y);
  m.platt_a_ = a;
  m.platt_b_ = b;
  return m;
}

Vector LinearSvm::margin(const Matrix& X) const {
  check_dim(X, input_dim());
  return (X * w_).array() + bias_;
}

Vector LinearSvm::positive_score(const Matrix& X) const {
  const Vector m = margin(X);
  Vector out(m.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double z = platt_a_ * m(i) + platt_b_;
    out(i) = z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
  }
  return out;
}

std::vector<Label> LinearSvm::predict(const Matrix& X) const {
  const Vector m = margin(X);
  std::vector<Label> out(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) out[static_cast<std::size_t>(i)] = m(i) > 0.0 ? 1 : 0;
  return out;
}

nlohmann::json LinearSvm::to_json() const {
  return {{"kind", "svm"}, {"w", vec_json(w_)}, {"bias", bias_}, {"platt_a", platt_a_}, {"platt_b", platt_b_}};
}

LinearSvm LinearSvm::from_json(const nlohmann::json& j) {
  LinearSvm m;
  m.w_ = json_vec(j.at("w"));
  m.bias_ = j.at("bias").get<double>();
  m.platt_a_ = j.at("platt_a").get<double>();
  m.platt_b_ = j.at("platt_b").get<double>();
  return m;
}

// -------------------------------------------------------------------- factory

std::unique_ptr<Classifier> fit_classifier(const ClassifierSpec& spec, const Matrix& X, const std::vector<Label>& y) {
  validate_training_data(X, y);
  auto params_as = [&]<typename P>() -> const P& {
    if (const auto* p = std::get_if<P>(&spec.params)) return *p;
    fail(ErrorCode::InvalidArgument, "hyperparameters do not match classifier " + std::string(to_string(spec.kind)));
  };
  switch (spec.kind) {
    case ClassifierKind::GaussianNB:
      return std::make_unique<GaussianNaiveBayes>(
          GaussianNaiveBayes::fit(X, y, params_as.template operator()<NaiveBayesParams>()));
    case ClassifierKind::QDA:
      return std::make_unique<Qda>(Qda::fit(X, y, params_as.template operator()<QdaParams>()));
    case ClassifierKind::KNN:
      return std::make_unique<Knn>(Knn::fit(X, y, params_as.template operator()<KnnParams>()));
    case ClassifierKind::LinearSVM:
      return std::make_unique<LinearSvm>(LinearSvm::fit(X, y, params_as.template operator()<SvmParams>(), spec.seed));
    case ClassifierKind::DecisionTree:
    case ClassifierKind::RandomForest:
    case ClassifierKind::ExtraTrees:
      return std::make_unique<TreeEnsemble>(
          TreeEnsemble::fit(spec.kind, X, y, params_as.template operator()<TreeParams>(), spec.seed));
    case ClassifierKind::MLP:
      return std::make_unique<MlpClassifier>(
          MlpClassifier::fit(X, y, params_as.template operator()<MlpParams>(), spec.seed));
  }
  fail(ErrorCode::InvalidArgument, "unknown classifier kind");
}

std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json& j) {
  switch (parse_classifier(j.at("kind").get<std::string>())) {
    case ClassifierKind::GaussianNB: return std::make_unique<GaussianNaiveBayes>(GaussianNaiveBayes::from_json(j));
    case ClassifierKind::QDA: return std::make_unique<Qda>(Qda::from_json(j));
    case ClassifierKind::KNN: return std::make_unique<Knn>(Knn::from_json(j));
    case ClassifierKind::LinearSVM: return std::make_unique<LinearSvm>(LinearSvm::from_json(j));
    case ClassifierKind::DecisionTree:
    case ClassifierKind::RandomForest:
    case ClassifierKind::ExtraTrees: return std::make_unique<TreeEnsemble>(TreeEnsemble::from_json(j));
    case ClassifierKind::MLP: return std::make_unique<MlpClassifier>(MlpClassifier::from_json(j));
  }
  fail(ErrorCode::InvalidArgument, "unknown classifier kind");
}

}  // namespace phyto::learn
