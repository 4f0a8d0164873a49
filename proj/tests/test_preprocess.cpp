#include <doctest.h>

#include <cmath>
#include <numeric>

#include "phyto/error.hpp"
#include "phyto/preprocess.hpp"
#include "phyto/rng.hpp"
#include "test_util.hpp"

using namespace phyto;
using doctest::Approx;

namespace {

SparseSeries sparse(std::vector<std::optional<double>> v, TimestampMs start = 0) {
  SparseSeries s;
  s.plant_id = "p";
  s.start_ms = start;
  s.values = std::move(v);
  return s;
}

UniformSeries uniform(std::vector<double> v) {
  UniformSeries s;
  s.plant_id = "p";
  s.values = std::move(v);
  return s;
}

}  // namespace

TEST_SUITE("preprocess") {

TEST_CASE("constant second averages to the constant") {
  RawTrace t;
  for (int i = 0; i < 200; ++i) t.samples.push_back({5 * i, 5.0});
  const auto s = preprocess::downsample_mean(t);
  REQUIRE(s.values.size() == 1);
  CHECK(*s.values[0] == 5.0);
}

TEST_CASE("samples 1, 2, 3 in one second average to 2") {
  RawTrace t;
  t.samples = {{0, 1.0}, {300, 2.0}, {600, 3.0}};
  const auto s = preprocess::downsample_mean(t);
  REQUIRE(s.values.size() == 1);
  CHECK(*s.values[0] == 2.0);
}

TEST_CASE("random second matches a summation oracle") {
  Rng rng = make_rng(1);
  RawTrace t;
  double sum = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double v = uniform01(rng);
    sum += v;
    t.samples.push_back({1000 + 5 * i, v});
  }
  const auto s = preprocess::downsample_mean(t);
  REQUIRE(s.values.size() == 1);
  CHECK(*s.values[0] == Approx(sum / 200.0).epsilon(1e-12));
  CHECK(s.start_ms == 1000);
}

TEST_CASE("bins follow wall-clock seconds and empty seconds stay missing") {
  RawTrace t;
  t.samples = {{1500, 1.0}, {1999, 3.0}, {2000, 10.0}, {4100, 7.0}};
  const auto s = preprocess::downsample_mean(t);
  REQUIRE(s.values.size() == 4);
  CHECK(s.start_ms == 1000);
  CHECK(*s.values[0] == 2.0);
  CHECK(*s.values[1] == 10.0);
  CHECK_FALSE(s.values[2].has_value());
  CHECK(*s.values[3] == 7.0);
}

TEST_CASE("downsampling preserves the count-weighted grand mean") {
  Rng rng = make_rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    RawTrace t;
    TimestampMs ts = 0;
    for (int i = 0; i < 5000; ++i) {
      ts += 1 + static_cast<TimestampMs>(uniform_index(rng, 40));
      t.samples.push_back({ts, 100.0 * standard_normal(rng)});
    }
    const auto s = preprocess::downsample_mean(t);
    std::vector<double> counts(s.values.size(), 0.0);
    for (const auto& x : t.samples) counts[static_cast<std::size_t>((x.timestamp_ms - s.start_ms) / 1000)] += 1.0;
    double weighted = 0.0;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      if (s.values[i]) weighted += *s.values[i] * counts[i];
    }
    double raw = 0.0;
    for (const auto& x : t.samples) raw += x.potential_mv;
    CHECK(weighted / 5000.0 == Approx(raw / 5000.0).epsilon(1e-9));
  }
}

TEST_CASE("linear fill between 0 and 10") {
  std::vector<std::optional<double>> v(11);
  v[0] = 0.0;
  v[10] = 10.0;
  const auto u = preprocess::interpolate_time(sparse(v));
  CHECK(u.values[4] == Approx(4.0).epsilon(1e-12));
}

TEST_CASE("series without gaps is unchanged") {
  const auto u = preprocess::interpolate_time(sparse({1.0, -2.0, 3.5}));
  CHECK(u.values == std::vector<double>{1.0, -2.0, 3.5});
}

TEST_CASE("two-point line formula per gap") {
  std::vector<std::optional<double>> v(8);
  v[0] = 2.0;
  v[3] = 8.0;
  v[7] = 8.0;
  const auto u = preprocess::interpolate_time(sparse(v));
  auto line = [](double t0, double v0, double t1, double v1, double t) { return v0 + (v1 - v0) * (t - t0) / (t1 - t0); };
  CHECK(std::abs(u.values[1] - line(0, 2, 3, 8, 1)) <= 1e-12);
  CHECK(std::abs(u.values[2] - line(0, 2, 3, 8, 2)) <= 1e-12);
  CHECK(std::abs(u.values[5] - line(3, 8, 7, 8, 5)) <= 1e-12);
  CHECK(u.values[1] == Approx(4.0));
  CHECK(u.values[2] == Approx(6.0));
  CHECK(u.values[5] == Approx(8.0));
}

TEST_CASE("edges extend flat and interior fills stay between neighbours") {
  Rng rng = make_rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::optional<double>> v(200);
    for (auto& x : v) {
      if (uniform01(rng) < 0.3) x = standard_normal(rng);
    }
    v[3] = 1.0;
    v[150] = -1.0;
    const auto u = preprocess::interpolate_time(sparse(v));
    std::size_t first = 0;
    while (!v[first]) ++first;
    for (std::size_t i = 0; i < first; ++i) CHECK(u.values[i] == *v[first]);
    std::size_t prev = first;
    for (std::size_t i = first + 1; i < v.size(); ++i) {
      if (!v[i]) continue;
      const double lo = std::min(*v[prev], *v[i]);
      const double hi = std::max(*v[prev], *v[i]);
      for (std::size_t k = prev + 1; k < i; ++k) {
        CHECK(u.values[k] >= lo - 1e-12);
        CHECK(u.values[k] <= hi + 1e-12);
      }
      prev = i;
    }
    for (std::size_t i = prev; i < v.size(); ++i) CHECK(u.values[i] == *v[prev]);
  }
}

TEST_CASE("fewer than two present values is too sparse") {
  std::vector<std::optional<double>> v(5);
  v[2] = 1.0;
  CHECK_THROWS_AS(preprocess::interpolate_time(sparse(v)), Error);
  try {
    preprocess::interpolate_time(sparse(v));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooSparse);
  }
}

TEST_CASE("z-score of 1, 2, 3") {
  const auto r = preprocess::zscore(uniform({1, 2, 3}));
  const double mu = (1.0 + 2.0 + 3.0) / 3.0;
  const double sigma = std::sqrt(((1 - mu) * (1 - mu) + (2 - mu) * (2 - mu) + (3 - mu) * (3 - mu)) / 3.0);
  CHECK(r.params.mu == Approx(mu));
  CHECK(r.params.sigma == Approx(std::sqrt(2.0 / 3.0)));
  CHECK(r.params.sigma == Approx(sigma));
  CHECK(r.series.values[0] == Approx(-1.224744871391589));
  CHECK(std::abs(r.series.values[1]) < 1e-15);
  CHECK(r.series.values[2] == Approx(1.224744871391589));
  CHECK(r.series.unit == Unit::ZScore);
}

TEST_CASE("z-score properties on random series") {
  Rng rng = make_rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(1000);
    for (auto& x : v) x = 50.0 + 20.0 * standard_normal(rng);
    const auto r = preprocess::zscore(uniform(v));
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(r.series.values.begin(), r.series.values.end(), 0.0) / n;
    double ss = 0.0;
    for (double z : r.series.values) ss += (z - mean) * (z - mean);
    CHECK(std::abs(mean) <= 1e-9);
    CHECK(std::abs(std::sqrt(ss / n) - 1.0) <= 1e-9);
    const auto again = preprocess::zscore(r.series);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(again.series.values[i] - r.series.values[i]) <= 1e-9);
    const auto back = preprocess::denormalize(r.series, r.params);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(back.values[i] - v[i]) <= 1e-9 * std::abs(v[i]));
  }
}

TEST_CASE("constant series is degenerate") {
  try {
    preprocess::zscore(uniform({4, 4, 4}));
    FAIL("expected DegenerateSeries");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateSeries);
  }
}

TEST_CASE("run chains downsample, coverage, interpolation and z-score") {
  // Two days at 2 Hz; the second day only half covered.
  RawTrace t;
  t.plant_id = "p";
  Rng rng = make_rng(9);
  for (TimestampMs ms = 0; ms < kMsPerDay; ms += 500) {
    if (ms % 7000 != 0) t.samples.push_back({ms, standard_normal(rng)});
  }
  for (TimestampMs ms = kMsPerDay; ms < kMsPerDay + kMsPerDay / 2; ms += 500) t.samples.push_back({ms, 1.0});
  preprocess::PreprocessOptions opts;
  opts.zscore = true;
  const auto r = preprocess::run(t, opts);
  REQUIRE(r.segments.size() == 1);
  CHECK(r.segments[0].values.size() == 86400);
  CHECK(r.coverage.retained_days() == 1);
  REQUIRE(r.zscore_params.has_value());
  CHECK(r.segments[0].unit == Unit::ZScore);
}

TEST_CASE("series CSV round trip keeps segments and z-score parameters") {
  UniformSeries a = uniform({1.0, 2.0, 3.0});
  a.start_ms = 0;
  UniformSeries b = uniform({4.0, 5.0});
  b.start_ms = 10000;
  phyto::test::TempDir dir;
  const auto path = dir.path() / "s.csv";
  preprocess::write_series(path, {a, b}, preprocess::ZScoreParams{2.0, 0.5});
  const auto back = preprocess::read_series(path);
  REQUIRE(back.segments.size() == 2);
  CHECK(back.segments[0].values == a.values);
  CHECK(back.segments[1].values == b.values);
  CHECK(back.segments[1].start_ms == 10000);
  REQUIRE(back.zscore_params.has_value());
  CHECK(back.zscore_params->sigma == 0.5);
}

}  // TEST_SUITE
