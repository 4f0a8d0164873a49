#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "phyto/error.hpp"
#include "phyto/resample.hpp"
#include "phyto/rng.hpp"

using namespace phyto;

namespace {

// Residual of `s` from the segment base + u * (nb - base) and the fitted u.
std::pair<double, double> segment_fit(const Eigen::RowVectorXd& s, const Eigen::RowVectorXd& base,
                                      const Eigen::RowVectorXd& nb) {
  const Eigen::RowVectorXd d = nb - base;
  const double len2 = d.squaredNorm();
  const double u = len2 > 0.0 ? (s - base).dot(d) / len2 : 0.0;
  return {(s - (base + u * d)).norm(), u};
}

// Indices of the k nearest minority rows of `base` (self excluded, ties by index).
std::vector<std::size_t> brute_neighbors(const Matrix& X, const std::vector<std::size_t>& minority, std::size_t base,
                                         std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t j : minority) {
    if (j != base) d.emplace_back((X.row(static_cast<Eigen::Index>(j)) - X.row(static_cast<Eigen::Index>(base))).squaredNorm(), j);
  }
  std::sort(d.begin(), d.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, d.size()); ++i) out.push_back(d[i].second);
  return out;
}

}  // namespace

TEST_SUITE("resample") {

TEST_CASE("balanced input is returned unchanged") {
  Matrix X(4, 2);
  X << 0, 1, 2, 3, 4, 5, 6, 7;
  const std::vector<Label> y = {0, 1, 0, 1};
  const auto r = resample::smote(X, y, {5, 1});
  CHECK(r.X == X);
  CHECK(r.y == y);
  CHECK(r.origins.empty());
}

TEST_CASE("two identical minority points give identical synthetics") {
  Matrix X(7, 2);
  X << 1, 1, 1, 1, 5, 5, 6, 6, 7, 7, 8, 8, 9, 9;
  const std::vector<Label> y = {1, 1, 0, 0, 0, 0, 0};
  const auto r = resample::smote(X, y, {5, 3});
  CHECK(r.k_used == 1);
  CHECK_FALSE(r.warnings.empty());
  REQUIRE(r.X.rows() == 10);
  for (Eigen::Index i = 7; i < 10; ++i) {
    CHECK(r.X(i, 0) == 1.0);
    CHECK(r.X(i, 1) == 1.0);
    CHECK(r.y[static_cast<std::size_t>(i)] == 1);
  }
}

TEST_CASE("diagonal minority and majority of nine") {
  Matrix X(12, 2);
  X.row(0) << 0, 0;
  X.row(1) << 1, 1;
  X.row(2) << 2, 2;
  for (int i = 0; i < 9; ++i) X.row(3 + i) << 10 + i, -5;
  std::vector<Label> y(12, 0);
  y[0] = y[1] = y[2] = 1;
  const auto r = resample::smote(X, y, {5, 7});
  REQUIRE(r.X.rows() == 18);
  REQUIRE(r.origins.size() == 6);
  for (std::size_t s = 0; s < 6; ++s) {
    const Eigen::RowVectorXd p = r.X.row(12 + static_cast<Eigen::Index>(s));
    CHECK(std::abs(p(0) - p(1)) < 1e-12);  // collinear with the diagonal
    const auto& o = r.origins[s];
    const auto [res, u] = segment_fit(p, X.row(static_cast<Eigen::Index>(o.base)), X.row(static_cast<Eigen::Index>(o.neighbor)));
    CHECK(res < 1e-9);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(std::abs(u - o.u) < 1e-9);
  }
}

TEST_CASE("random data: parity, segments, neighbours, originals preserved") {
  Rng rng = make_rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n_min = 3 + uniform_index(rng, 15);
    const std::size_t n_maj = n_min + 1 + uniform_index(rng, 40);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(uniform_index(rng, 5));
    Matrix X(static_cast<Eigen::Index>(n_min + n_maj), d);
    std::vector<Label> y;
    const Label minority = trial % 2;
    std::vector<std::size_t> min_rows;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      for (Eigen::Index j = 0; j < d; ++j) X(i, j) = standard_normal(rng);
      const bool is_min = static_cast<std::size_t>(i) % 3 == 0 && min_rows.size() < n_min;
      y.push_back(is_min ? minority : 1 - minority);
      if (is_min) min_rows.push_back(static_cast<std::size_t>(i));
    }
    std::size_t majority_count = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1 - minority));
    if (min_rows.size() < 2) continue;
    const auto r = resample::smote(X, y, {5, static_cast<std::uint64_t>(trial)});
    CHECK(static_cast<std::size_t>(std::count(r.y.begin(), r.y.end(), minority)) == majority_count);
    CHECK(static_cast<std::size_t>(std::count(r.y.begin(), r.y.end(), 1 - minority)) == majority_count);
    CHECK(r.X.topRows(X.rows()) == X);
    CHECK(std::equal(y.begin(), y.end(), r.y.begin()));
    std::size_t prev_base = 0;
    for (std::size_t s = 0; s < r.origins.size(); ++s) {
      const auto& o = r.origins[s];
      CHECK(o.base >= prev_base);
      prev_base = o.base;
      const auto nbrs = brute_neighbors(X, min_rows, o.base, r.k_used);
      CHECK(std::find(nbrs.begin(), nbrs.end(), o.neighbor) != nbrs.end());
      const auto [res, u] = segment_fit(r.X.row(X.rows() + static_cast<Eigen::Index>(s)),
                                        X.row(static_cast<Eigen::Index>(o.base)), X.row(static_cast<Eigen::Index>(o.neighbor)));
      CHECK(res < 1e-9);
      CHECK(r.y[static_cast<std::size_t>(X.rows()) + s] == minority);
    }
  }
}

TEST_CASE("same seed is bit-identical, other seeds keep originals") {
  Rng rng = make_rng(32);
  Matrix X(30, 3);
  std::vector<Label> y;
  for (Eigen::Index i = 0; i < 30; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) X(i, j) = standard_normal(rng);
    y.push_back(i < 8 ? 1 : 0);
  }
  const auto a = resample::smote(X, y, {5, 9});
  const auto b = resample::smote(X, y, {5, 9});
  const auto c = resample::smote(X, y, {5, 10});
  CHECK(a.X == b.X);
  CHECK(a.X != c.X);
  CHECK(c.X.topRows(30) == X);
}

TEST_CASE("errors") {
  Matrix X(4, 1);
  X << 0, 1, 2, 3;
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  CHECK(code([&] { resample::smote(X, {0, 0, 0, 1}, {}); }) == ErrorCode::TooFewMinoritySamples);
  CHECK(code([&] { resample::smote(X, {0, 0, 0, 0}, {}); }) == ErrorCode::SingleClassInput);
  CHECK(code([&] { resample::smote(X, {0, 0, 1}, {}); }) == ErrorCode::LengthMismatch);
  CHECK(code([&] { resample::smote(X, {0, 0, 1, 1}, {0, 0}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("feature-matrix overload tags synthetic provenance") {
  features::FeatureMatrix m;
  m.names = {"a"};
  m.X.resize(5, 1);
  m.X << 0, 1, 2, 3, 4;
  m.y = {1, 1, 0, 0, 0};
  for (int i = 0; i < 5; ++i) m.provenance.push_back({"p" + std::to_string(i), Channel::Stem, i});
  const auto out = resample::smote(m, {5, 1});
  REQUIRE(out.rows() == 6);
  CHECK(out.provenance[5].plant_id.rfind("smote:", 0) == 0);
}

}  // TEST_SUITE
