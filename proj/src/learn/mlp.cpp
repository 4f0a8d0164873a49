#include "phyto/learn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json_util.hpp"
#include "phyto/error.hpp"

namespace phyto::learn {

namespace {

void softmax_rows(Matrix& Z) {
  for (Eigen::Index r = 0; r < Z.rows(); ++r) {
    const double mx = Z.row(r).maxCoeff();
    Z.row(r) = (Z.row(r).array() - mx).exp();
    Z.row(r) /= Z.row(r).sum();
  }
}

double weight_penalty(const MlpNetwork& net) {
  double s = 0.0;
  for (const auto& w : net.weights) s += w.squaredNorm();
  return s;
}

double cross_entropy(const Matrix& proba, const std::vector<Label>& y) {
  double ce = 0.0;
  for (Eigen::Index r = 0; r < proba.rows(); ++r) {
    ce -= std::log(std::max(proba(r, y[static_cast<std::size_t>(r)]), 1e-300));
  }
  return ce / static_cast<double>(proba.rows());
}

}  // namespace

MlpNetwork MlpNetwork::init(int inputs, const std::vector<int>& hidden, int outputs, Rng& rng) {
  MlpNetwork net;
  std::vector<int> sizes{inputs};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(outputs);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double scale = std::sqrt(2.0 / static_cast<double>(sizes[l]));
    Matrix w(sizes[l], sizes[l + 1]);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = scale * standard_normal(rng);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vector::Zero(sizes[l + 1]));
  }
  return net;
}

Matrix MlpNetwork::forward(const Matrix& X) const {
  Matrix a = X;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Matrix z = (a * weights[l]).rowwise() + biases[l].transpose();
    if (l + 1 < weights.size()) {
      a = z.cwiseMax(0.0);
    } else {
      softmax_rows(z);
      a = std::move(z);
    }
  }
  return a;
}

double MlpNetwork::loss(const Matrix& X, const std::vector<Label>& y, double l2) const {
  const double n = static_cast<double>(X.rows());
  return cross_entropy(forward(X), y) + l2 / (2.0 * n) * weight_penalty(*this);
}

double MlpNetwork::loss_and_gradient(const Matrix& X, const std::vector<Label>& y, double l2,
                                     MlpGradients& grad) const {
  const std::size_t layers = weights.size();
  const double n = static_cast<double>(X.rows());
  std::vector<Matrix> acts;  // acts[l] = input to layer l
  acts.reserve(layers + 1);
  acts.push_back(X);
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = (acts.back() * weights[l]).rowwise() + biases[l].transpose();
    if (l + 1 < layers) {
      acts.push_back(z.cwiseMax(0.0));
    } else {
      softmax_rows(z);
      acts.push_back(std::move(z));
    }
  }
  const Matrix& proba = acts.back();
  const double value = cross_entropy(proba, y) + l2 / (2.0 * n) * weight_penalty(*this);

  grad.weights.resize(layers);
  grad.biases.resize(layers);
  Matrix delta = proba;
  for (Eigen::Index r = 0; r < delta.rows(); ++r) delta(r, y[static_cast<std::size_t>(r)]) -= 1.0;
  delta /= n;
  for (std::size_t l = layers; l-- > 0;) {
    grad.weights[l] = acts[l].transpose() * delta + (l2 / n) * weights[l];
    grad.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Matrix back = delta * weights[l].transpose();
      // ReLU derivative: active where the post-activation is positive.
      delta = back.array() * (acts[l].array() > 0.0).cast<double>();
    }
  }
  return value;
}

MlpClassifier MlpClassifier::fit(const Matrix& X, const std::vector<Label>& y, const MlpParams& p,
                                 std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x31f);
  MlpClassifier m;
  m.net_ = MlpNetwork::init(static_cast<int>(X.cols()), p.hidden, 2, rng);

  // Stratified 10% hold-out for the step-size schedule; tiny sets monitor the
  // training loss instead.
  std::vector<std::size_t> train_idx, val_idx;
  {
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < y.size(); ++i) by_class[static_cast<std::size_t>(y[i])].push_back(i);
    const bool hold_out = by_class[0].size() >= 10 && by_class[1].size() >= 10;
    for (auto& rows : by_class) {
      for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[uniform_index(rng, i)]);
      const std::size_t n_val = hold_out ? std::max<std::size_t>(1, rows.size() / 10) : 0;
      val_idx.insert(val_idx.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_val));
      train_idx.insert(train_idx.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_val), rows.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
  }
  auto gather = [&](const std::vector<std::size_t>& idx, Matrix& Xs, std::vector<Label>& ys) {
    Xs.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
    ys.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      Xs.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(idx[i]));
      ys[i] = y[idx[i]];
    }
  };
  Matrix Xt, Xv;
  std::vector<Label> yt, yv;
  gather(train_idx, Xt, yt);
  if (val_idx.empty()) {
    Xv = Xt;
    yv = yt;
  } else {
    gather(val_idx, Xv, yv);
  }

  const std::size_t layers = m.net_.weights.size();
  MlpGradients grad;
  std::vector<Matrix> mw(layers), vw(layers);
  std::vector<Vector> mb(layers), vb(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    mw[l] = Matrix::Zero(m.net_.weights[l].rows(), m.net_.weights[l].cols());
    vw[l] = mw[l];
    mb[l] = Vector::Zero(m.net_.biases[l].size());
    vb[l] = mb[l];
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8, tol = 1e-6;
  double step = p.step;
  long long t = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  MlpNetwork best_net = m.net_;
  int stale = 0, halvings = 0;

  const std::size_t n = yt.size();
  const auto batch = static_cast<std::size_t>(std::max(1, p.batch));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Matrix Xb;
  std::vector<Label> yb;
  for (int epoch = 0; epoch < p.max_epochs; ++epoch) {
    m.epochs_run_ = epoch + 1;
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      Xb.resize(static_cast<Eigen::Index>(stop - start), Xt.cols());
      yb.resize(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        Xb.row(static_cast<Eigen::Index>(i - start)) = Xt.row(static_cast<Eigen::Index>(order[i]));
        yb[i - start] = yt[order[i]];
      }
      m.net_.loss_and_gradient(Xb, yb, p.l2, grad);
      ++t;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
      for (std::size_t l = 0; l < layers; ++l) {
        mw[l] = beta1 * mw[l] + (1.0 - beta1) * grad.weights[l];
        vw[l] = beta2 * vw[l] + (1.0 - beta2) * grad.weights[l].cwiseAbs2();
        m.net_.weights[l].array() -= step * (mw[l].array() / c1) / ((vw[l].array() / c2).sqrt() + eps);
        mb[l] = beta1 * mb[l] + (1.0 - beta1) * grad.biases[l];
        vb[l] = beta2 * vb[l] + (1.0 - beta2) * grad.biases[l].cwiseAbs2();
        m.net_.biases[l].array() -= step * (mb[l].array() / c1) / ((vb[l].array() / c2).sqrt() + eps);
      }
    }
    const double val_loss = cross_entropy(m.net_.forward(Xv), yv);
    if (val_loss < best_loss - tol) {
      best_loss = val_loss;
      best_net = m.net_;
      stale = 0;
    } else if (++stale >= p.patience) {
      if (halvings >= p.max_halvings) break;
      step /= 2.0;
      ++halvings;
      stale = 0;
    }
  }
  m.net_ = std::move(best_net);
  return m;
}

Vector MlpClassifier::positive_score(const Matrix& X) const {
  if (X.cols() != input_dim()) {
    fail(ErrorCode::DimensionMismatch,
         "expected " + std::to_string(input_dim()) + " columns, got " + std::to_string(X.cols()));
  }
  return net_.forward(X).col(1);
}

nlohmann::json MlpClassifier::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < net_.weights.size(); ++l) {
    layers.push_back({{"w", detail::mat_json(net_.weights[l])}, {"b", detail::vec_json(net_.biases[l])}});
  }
  return {{"kind", "mlp"}, {"epochs_run", epochs_run_}, {"layers", layers}};
}

MlpClassifier MlpClassifier::from_json(const nlohmann::json& j) {
  MlpClassifier m;
  m.epochs_run_ = j.at("epochs_run").get<int>();
  for (const auto& l : j.at("layers")) {
    m.net_.weights.push_back(detail::json_mat(l.at("w")));
    m.net_.biases.push_back(detail::json_vec(l.at("b")));
  }
  return m;
}

}  // namespace phyto::learn
