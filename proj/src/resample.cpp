#include "phyto/resample.hpp"

#include <algorithm>
#include <numeric>

#include "phyto/error.hpp"
#include "phyto/rng.hpp"

namespace phyto::resample {

namespace {

std::vector<std::size_t> nearest_minority(const Matrix& X, const std::vector<std::size_t>& minority, std::size_t self,
                                          std::size_t k) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(minority.size());
  const auto row = X.row(static_cast<Eigen::Index>(self));
  for (std::size_t m : minority) {
    if (m == self) continue;
    dist.emplace_back((X.row(static_cast<Eigen::Index>(m)) - row).squaredNorm(), m);
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(dist[i].second);
  return out;
}

}  // namespace

SmoteResult smote(const Matrix& X, const std::vector<Label>& y, const SmoteConfig& cfg) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) fail(ErrorCode::LengthMismatch, "SMOTE rows vs labels");
  if (cfg.k_neighbors < 1) fail(ErrorCode::InvalidArgument, "SMOTE k must be >= 1");

  const auto positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  const std::size_t negatives = y.size() - positives;
  if (positives == 0 || negatives == 0) fail(ErrorCode::SingleClassInput, "SMOTE needs two classes");

  SmoteResult out;
  out.X = X;
  out.y = y;
  if (positives == negatives) {
    out.k_used = cfg.k_neighbors;
    return out;
  }
  const Label minority_label = positives < negatives ? 1 : 0;
  std::vector<std::size_t> minority;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == minority_label) minority.push_back(i);
  }
  if (minority.size() < 2) fail(ErrorCode::TooFewMinoritySamples, "minority class has fewer than 2 rows");

  std::size_t k = cfg.k_neighbors;
  if (minority.size() <= k) {
    k = minority.size() - 1;
    out.warnings.push_back("k_neighbors reduced to " + std::to_string(k) + " (minority size " +
                           std::to_string(minority.size()) + ")");
  }
  out.k_used = k;

  const std::size_t needed = std::max(positives, negatives) - minority.size();
  std::vector<std::size_t> draws(minority.size(), needed / minority.size());
  {
    // The remainder goes to distinct bases chosen by a seeded partial shuffle.
    std::vector<std::size_t> order(minority.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(cfg.seed, 0);
    const std::size_t extra = needed % minority.size();
    for (std::size_t i = 0; i < extra; ++i) {
      const std::size_t j = i + uniform_index(rng, order.size() - i);
      std::swap(order[i], order[j]);
      ++draws[order[i]];
    }
  }

  const auto cols = X.cols();
  out.X.conservativeResize(static_cast<Eigen::Index>(y.size() + needed), cols);
  auto next = static_cast<Eigen::Index>(y.size());
  for (std::size_t b = 0; b < minority.size(); ++b) {
    if (draws[b] == 0) continue;
    const std::size_t base = minority[b];
    const auto neighbours = nearest_minority(X, minority, base, k);
    Rng rng = make_rng(cfg.seed, 1 + base);
    for (std::size_t d = 0; d < draws[b]; ++d) {
      const std::size_t nb = neighbours[uniform_index(rng, neighbours.size())];
      const double u = uniform01(rng);
      out.X.row(next) = X.row(static_cast<Eigen::Index>(base)) +
                        u * (X.row(static_cast<Eigen::Index>(nb)) - X.row(static_cast<Eigen::Index>(base)));
      out.y.push_back(minority_label);
      out.origins.push_back({base, nb, u});
      ++next;
    }
  }
  return out;
}

features::FeatureMatrix smote(const features::FeatureMatrix& train, const SmoteConfig& cfg) {
  SmoteResult r = smote(train.X, train.y, cfg);
  features::FeatureMatrix out;
  out.task = train.task;
  out.catalog_version = train.catalog_version;
  out.names = train.names;
  out.X = std::move(r.X);
  out.y = std::move(r.y);
  out.provenance = train.provenance;
  if (!out.provenance.empty()) {
    for (const auto& o : r.origins) {
      features::Provenance p = train.provenance[o.base];
      p.plant_id = "smote:" + p.plant_id;
      out.provenance.push_back(p);
    }
  }
  return out;
}

}  // namespace phyto::resample
