#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "phyto/error.hpp"
#include "phyto/rng.hpp"
#include "phyto/select.hpp"

using namespace phyto;
using namespace phyto::select;

namespace {

features::FeatureMatrix planted(std::size_t rows, std::size_t informative, std::size_t noise, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  features::FeatureMatrix m;
  m.X.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(informative + noise));
  for (std::size_t r = 0; r < rows; ++r) {
    const Label l = r % 3 == 0 ? 1 : 0;
    m.y.push_back(l);
    for (std::size_t j = 0; j < informative + noise; ++j) {
      // Informative columns sit at the end so that ranking must reorder them.
      const bool info = j >= noise;
      const double strength = info ? 4.0 - 0.5 * static_cast<double>(j - noise) : 0.0;
      m.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = strength * l + standard_normal(rng);
    }
  }
  for (std::size_t j = 0; j < informative + noise; ++j) m.names.push_back("c" + std::to_string(j));
  return m;
}

learn::PipelineSpec gnb() { return {{}, learn::ClassifierSpec::defaults(learn::ClassifierKind::GaussianNB)}; }

}  // namespace

TEST_SUITE("select") {

TEST_CASE("copied balanced label has MI ln 2") {
  Matrix X(100, 1);
  std::vector<Label> y;
  for (Eigen::Index r = 0; r < 100; ++r) {
    y.push_back(static_cast<Label>(r % 2));
    X(r, 0) = r % 2;
  }
  const auto s = mutual_information(X, y);
  CHECK(std::abs(s[0].mi - std::log(2.0)) <= 1e-9);
  CHECK(s[0].name == "f0");
  CHECK(s[0].rank == 1);
}

TEST_CASE("independent noise has MI at most 0.01 nats") {
  Rng rng = make_rng(77);
  Matrix X(10000, 1);
  std::vector<Label> y;
  for (Eigen::Index r = 0; r < 10000; ++r) {
    X(r, 0) = uniform01(rng);
    y.push_back(uniform01(rng) < 0.5 ? 1 : 0);
  }
  const double mi = mutual_information(X, y)[0].mi;
  CHECK(mi >= 0.0);
  CHECK(mi <= 0.01);
}

TEST_CASE("three-point toy matches the contingency table") {
  const std::vector<double> x = {1, 2, 3};
  const auto bins = equal_frequency_bins(x, 2);
  CHECK(bins == std::vector<std::size_t>{0, 0, 1});
  // Table: bin0 = {A, A}, bin1 = {B}. p(b, y) / (p(b) p(y)).
  const double expected = 2.0 / 3.0 * std::log((2.0 / 3.0) / ((2.0 / 3.0) * (2.0 / 3.0))) +
                          1.0 / 3.0 * std::log((1.0 / 3.0) / ((1.0 / 3.0) * (1.0 / 3.0)));
  const std::vector<Label> y = {0, 0, 1};
  CHECK(plugin_mi(bins, y) == doctest::Approx(expected).epsilon(1e-12));
  Matrix X(3, 1);
  X << 1, 2, 3;
  CHECK(mutual_information(X, y, {"x"}, 2)[0].mi == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ties share the bin of their first rank") {
  const std::vector<double> x = {5, 1, 1, 1, 9, 7, 7, 3};
  // Sorted: 1 1 1 3 5 7 7 9 -> first ranks 0 0 0 3 4 5 5 7, 4 bins of n=8.
  CHECK(equal_frequency_bins(x, 4) == std::vector<std::size_t>{2, 0, 0, 0, 3, 2, 2, 1});
}

TEST_CASE("MI is invariant to relabeling and monotone transforms") {
  Rng rng = make_rng(78);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix X(300, 4);
    std::vector<Label> y, flipped;
    for (Eigen::Index r = 0; r < 300; ++r) {
      const Label l = uniform01(rng) < 0.3 ? 1 : 0;
      y.push_back(l);
      flipped.push_back(1 - l);
      for (Eigen::Index j = 0; j < 4; ++j) X(r, j) = static_cast<double>(j) * l + standard_normal(rng);
    }
    const Matrix T = (X.array() * 3.0).exp().matrix();
    const auto a = mutual_information(X, y);
    const auto b = mutual_information(X, flipped);
    const auto c = mutual_information(T, y);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].column == b[i].column);
      CHECK(a[i].column == c[i].column);
      CHECK(a[i].mi == doctest::Approx(b[i].mi).epsilon(1e-12));
      CHECK(a[i].mi == doctest::Approx(c[i].mi).epsilon(1e-12));
      CHECK(a[i].mi >= 0.0);
      CHECK(a[i].rank == i + 1);
      if (i > 0) CHECK(a[i - 1].mi >= a[i].mi);
    }
  }
}

TEST_CASE("planted informative features occupy the top ranks") {
  const auto m = planted(600, 3, 12, 79);
  const auto s = mutual_information(m.X, m.y, m.names);
  std::vector<std::size_t> top = {s[0].column, s[1].column, s[2].column};
  std::sort(top.begin(), top.end());
  CHECK(top == std::vector<std::size_t>{12, 13, 14});
  CHECK(top_k_columns(s, 3) == top);
  for (std::size_t k = 1; k < s.size(); ++k) {
    auto small = top_k_columns(s, k);
    const auto big = top_k_columns(s, k + 1);
    CHECK(std::includes(big.begin(), big.end(), small.begin(), small.end()));
  }
}

TEST_CASE("sweep with one decisive feature") {
  Rng rng = make_rng(80);
  features::FeatureMatrix m;
  m.X.resize(150, 5);
  for (Eigen::Index r = 0; r < 150; ++r) {
    const Label l = r % 3 == 0 ? 1 : 0;
    m.y.push_back(l);
    for (Eigen::Index j = 0; j < 5; ++j) m.X(r, j) = standard_normal(rng);
    m.X(r, 3) = l ? 10.0 + uniform01(rng) : uniform01(rng);
  }
  m.names = {"n0", "n1", "n2", "key", "n4"};
  SweepOptions opts;
  opts.max_k = 5;
  opts.protocol.plan.seed = 5;
  const auto sweep = sweep_top_k(m, gnb(), opts);
  REQUIRE(sweep.entries.size() == 5);
  CHECK(sweep.entries[0].selected == std::vector<std::string>{"key"});
  CHECK(sweep.entries[0].mean_macro_f1 == 100.0);
  for (const auto& e : sweep.entries) CHECK(e.mean_macro_f1 >= 95.0);
  for (std::size_t k = 1; k < 5; ++k) {
    const auto& a = sweep.entries[k - 1].selected;
    const auto& b = sweep.entries[k].selected;
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
    CHECK(b.back() == sweep.entries[k].feature_added);
  }
}

TEST_CASE("sweep endpoint equals the all-features evaluation") {
  const auto m = planted(120, 2, 4, 81);
  for (const auto mode : {MiMode::PerSplit, MiMode::Global}) {
    SweepOptions opts;
    opts.max_k = 6;
    opts.mode = mode;
    opts.protocol.plan.seed = 9;
    const auto sweep = sweep_top_k(m, gnb(), opts);
    const auto full = eval::evaluate_protocol(m, gnb(), opts.protocol);
    CHECK(sweep.entries.back().mean_macro_f1 == full.test_macro_f1_mean);
    CHECK(sweep.entries.back().std_macro_f1 == full.test_macro_f1_std);
    CHECK(sweep.entries.back().val_mean_macro_f1 == full.val_macro_f1_mean);
    const auto again = sweep_top_k(m, gnb(), opts);
    for (std::size_t k = 0; k < 6; ++k) CHECK(again.entries[k].mean_macro_f1 == sweep.entries[k].mean_macro_f1);
  }
}

TEST_CASE("sweep rejects bad K") {
  const auto m = planted(60, 1, 2, 82);
  SweepOptions opts;
  opts.max_k = 4;
  CHECK_THROWS_AS(sweep_top_k(m, gnb(), opts), Error);
  opts.max_k = 0;
  CHECK_THROWS_AS(sweep_top_k(m, gnb(), opts), Error);
}

}  // TEST_SUITE
