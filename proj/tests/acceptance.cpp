// Acceptance harness: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "phyto/automl.hpp"
#include "phyto/csv.hpp"
#include "phyto/eval.hpp"
#include "phyto/experiment.hpp"
#include "phyto/learn/mlp.hpp"
#include "phyto/learn/pipeline.hpp"
#include "phyto/learn/transforms.hpp"
#include "phyto/preprocess.hpp"
#include "phyto/resample.hpp"
#include "phyto/select.hpp"
#include "phyto/synth.hpp"

using namespace phyto;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Collects failed checks; the criterion passes when none failed.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok) failed_.push_back(what);
  }
  Outcome outcome(const std::string& summary) const {
    if (failed_.empty()) return {true, summary + " (" + std::to_string(total_) + " checks)"};
    std::string d = std::to_string(failed_.size()) + "/" + std::to_string(total_) + " checks failed: ";
    for (std::size_t i = 0; i < failed_.size() && i < 4; ++i) d += (i ? "; " : "") + failed_[i];
    return {false, d};
  }

 private:
  std::size_t total_ = 0;
  std::vector<std::string> failed_;
};

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path g_work;

// ---------------------------------------------------------------------------
// 1. Field-scale numbers

struct TableCell {
  const char* task;
  const char* channel;
  const char* classifier;
  double mean;
};

// Manual-ML macro F1 means from the published table (percent).
constexpr TableCell kPublished[] = {
    {"windy_calm", "stem", "gnb", 31.90}, {"day_night", "stem", "gnb", 63.41}, {"rain_dry", "stem", "gnb", 60.02},
    {"warm_cold", "stem", "gnb", 63.40},  {"windy_calm", "stem", "knn", 49.14}, {"day_night", "stem", "knn", 69.43},
    {"rain_dry", "stem", "knn", 53.65},   {"warm_cold", "stem", "knn", 59.30},  {"windy_calm", "stem", "mlp", 80.51},
    {"day_night", "stem", "mlp", 82.08},  {"rain_dry", "stem", "mlp", 88.50},   {"warm_cold", "stem", "mlp", 82.35},
    {"windy_calm", "stem", "svm", 73.75}, {"day_night", "stem", "svm", 79.58},  {"rain_dry", "stem", "svm", 84.87},
    {"warm_cold", "stem", "svm", 77.27},  {"windy_calm", "stem", "rf", 87.91},  {"day_night", "stem", "rf", 92.80},
    {"rain_dry", "stem", "rf", 93.78},    {"warm_cold", "stem", "rf", 88.48},   {"windy_calm", "leaf", "gnb", 61.36},
    {"day_night", "leaf", "gnb", 55.84},  {"rain_dry", "leaf", "gnb", 64.44},   {"warm_cold", "leaf", "gnb", 60.42},
    {"windy_calm", "leaf", "knn", 52.85}, {"day_night", "leaf", "knn", 66.56},  {"rain_dry", "leaf", "knn", 56.31},
    {"warm_cold", "leaf", "knn", 62.05},  {"windy_calm", "leaf", "mlp", 74.71}, {"day_night", "leaf", "mlp", 79.66},
    {"rain_dry", "leaf", "mlp", 88.62},   {"warm_cold", "leaf", "mlp", 79.14},  {"windy_calm", "leaf", "svm", 67.21},
    {"day_night", "leaf", "svm", 75.54},  {"rain_dry", "leaf", "svm", 82.43},   {"warm_cold", "leaf", "svm", 75.45},
    {"windy_calm", "leaf", "rf", 87.31},  {"day_night", "leaf", "rf", 91.21},   {"rain_dry", "leaf", "rf", 93.65},
    {"warm_cold", "leaf", "rf", 89.64},
};

Outcome criterion_field_scale() {
  const char* cfg_path = std::getenv("PHYTO_FIELD_CONFIG");
  if (!cfg_path) {
    return {true,
            "informational: field-scale table values need the published dataset, which is not bundled; "
            "set PHYTO_FIELD_CONFIG to an experiment config over it to print deviations (target +/-5 points, "
            "non-blocking)"};
  }
  json j = read_json(cfg_path);
  j["classifiers"] = {"gnb", "knn", "mlp", "svm", "rf"};
  if (!j.contains("output_dir")) j["output_dir"] = (g_work / "field").string();
  const auto cfg = experiment::ExperimentConfig::from_json(j);
  experiment::run_experiment(cfg);
  std::size_t within = 0, compared = 0;
  double worst = 0.0;
  for (const auto& c : kPublished) {
    const fs::path report = cfg.output_dir / "reports" /
                            (std::string(c.task) + "_" + c.channel + "_" + c.classifier + ".json");
    if (!fs::exists(report)) continue;
    const double got = read_json(report).at("macro_f1_mean").get<double>();
    const double dev = got - c.mean;
    std::cout << "  " << c.task << " " << c.channel << " " << c.classifier << ": " << fmt(got) << " vs "
              << fmt(c.mean) << " (" << (dev >= 0 ? "+" : "") << fmt(dev) << ")\n";
    ++compared;
    within += std::abs(dev) <= 5.0;
    worst = std::max(worst, std::abs(dev));
  }
  return {true, "informational: " + std::to_string(within) + "/" + std::to_string(compared) +
                    " cells within 5 points, worst deviation " + fmt(worst)};
}

// ---------------------------------------------------------------------------
// 2. Synthetic end-to-end

fs::path signal_run_dir() { return g_work / "signal"; }

json synthetic_config(const fs::path& out, std::uint64_t seed, std::size_t plants, std::size_t days,
                      double strength) {
  return {{"seed", seed},
          {"output_dir", out.string()},
          {"input", {{"synthetic", {{"plants", plants}, {"days", days}, {"channels", {"stem"}}, {"strengths", strength}}}}},
          {"tasks", {"day_night", "rain_dry"}},
          {"channels", {"stem"}},
          {"classifiers", {"rf"}},
          {"profile", false}};
}

Outcome criterion_synthetic() {
  Checks checks;
  const auto t0 = std::chrono::steady_clock::now();
  experiment::run_experiment(experiment::ExperimentConfig::from_json(synthetic_config(signal_run_dir(), 7, 3, 6, 1.0)));
  const fs::path null_dir = g_work / "null";
  experiment::run_experiment(experiment::ExperimentConfig::from_json(synthetic_config(null_dir, 8, 4, 6, 0.0)));
  const double elapsed = seconds_since(t0);

  std::string detail;
  for (const std::string task : {"day_night", "rain_dry"}) {
    const fs::path sig = signal_run_dir() / "reports" / (task + "_stem_rf.json");
    const fs::path nul = null_dir / "reports" / (task + "_stem_rf.json");
    checks.expect(fs::exists(sig) && fs::exists(nul), task + " reports missing");
    if (!fs::exists(sig) || !fs::exists(nul)) continue;
    const double f_sig = read_json(sig).at("macro_f1_mean").get<double>();
    const double f_nul = read_json(nul).at("macro_f1_mean").get<double>();
    checks.expect(f_sig >= 90.0, task + " signal F1 " + fmt(f_sig) + " < 90");
    checks.expect(std::abs(f_nul - 50.0) <= 5.0, task + " null F1 " + fmt(f_nul) + " outside 50 +/- 5");
    detail += task + " signal " + fmt(f_sig) + ", null " + fmt(f_nul) + "; ";
  }
  checks.expect(elapsed <= 300.0, "runtime " + fmt(elapsed, 1) + " s > 300 s");
  return checks.outcome(detail + "both runs " + fmt(elapsed, 1) + " s");
}

// ---------------------------------------------------------------------------
// 3. AutoML contract

Outcome criterion_automl() {
  Checks checks;
  const auto data = features::read_matrix_csv(signal_run_dir() / "features" / "day_night_stem.csv");
  eval::SplitPlan plan;
  plan.seed = 7;
  const auto holdout = eval::test_holdout(data.y, plan);
  const auto pool = data.select_rows(holdout.train);

  automl::SearchOptions opts;
  opts.seed = 7;
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = automl::search(pool.X, pool.y, opts);
  const double elapsed = seconds_since(t0);
  const auto& trace = result.trace;

  double best_a = -1.0;
  std::set<std::string> seen_a;
  std::size_t discards = 0;
  for (const auto& e : trace.entries) {
    if (e.phase != automl::Phase::Default) continue;
    seen_a.insert(e.spec.describe());
    if (e.val_macro_f1) {
      best_a = std::max(best_a, *e.val_macro_f1);
    } else {
      ++discards;
    }
  }
  const double best = trace.best().val_macro_f1.value_or(-1.0);
  checks.expect(best >= best_a, "returned score " + fmt(best) + " below best default " + fmt(best_a));
  checks.expect(result.pipeline.spec().describe() == trace.best().spec.describe(), "refit spec differs from trace best");

  // Independent enumeration of the slot grid.
  std::set<std::string> grid;
  for (const std::string s : {"", "nor", "std", "minmax"}) {
    for (const std::string f : {"", "vt", "pca", "vt + pca"}) {
      for (auto c : learn::kAllClassifiers) {
        std::string name = s;
        if (!f.empty()) name += (name.empty() ? "" : " + ") + f;
        name += (name.empty() ? "" : " + ") + std::string(learn::to_string(c));
        grid.insert(name);
      }
    }
  }
  checks.expect(seen_a == grid, "phase-a candidates differ from the enumerated grid");
  checks.expect(trace.phase_a_evaluations == grid.size() - discards,
                "phase-a evaluations " + std::to_string(trace.phase_a_evaluations) + " != " +
                    std::to_string(grid.size()) + " - " + std::to_string(discards));

  double prev = -1.0;
  for (const auto& e : trace.entries) {
    checks.expect(e.best_so_far >= prev, "best-so-far decreased");
    prev = e.best_so_far;
  }

  automl::SearchOptions flat;
  flat.seed = 7;
  flat.patience = 100;
  flat.budget = 1024;
  const auto flat_trace = automl::run_search([](const learn::PipelineSpec&) { return 75.0; }, flat);
  checks.expect(flat_trace.phase_b_draws == 100 && flat_trace.stopped_early,
                "flat scenario ran " + std::to_string(flat_trace.phase_b_draws) + " phase-b draws, expected 100");

  return checks.outcome("best " + trace.best().spec.describe() + " val F1 " + fmt(best) + " >= default best " +
                        fmt(best_a) + "; phase a " + std::to_string(trace.phase_a_evaluations) + " evaluated + " +
                        std::to_string(discards) + " discarded of " + std::to_string(grid.size()) + "; phase b " +
                        std::to_string(trace.phase_b_draws) + " draws; flat stop after " +
                        std::to_string(flat_trace.phase_b_draws) + "; search " + fmt(elapsed, 1) + " s");
}

// ---------------------------------------------------------------------------
// 4. Oracle equivalence

double brute_step_auc(const std::vector<Label>& y, const std::vector<double>& s) {
  std::vector<double> th(s);
  std::sort(th.begin(), th.end(), std::greater<>());
  th.erase(std::unique(th.begin(), th.end()), th.end());
  double pos = 0;
  for (auto l : y) pos += l;
  double auc = 0.0, prev_r = 0.0;
  for (double t : th) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (s[i] >= t) (y[i] ? tp : fp) += 1;
    }
    auc += (tp / pos - prev_r) * (tp / (tp + fp));
    prev_r = tp / pos;
  }
  return auc;
}

Outcome criterion_oracles() {
  Checks checks;
  Rng rng = make_rng(2024);

  // Macro F1 and recall against brute-force confusion counting.
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Label> t, p;
    const std::size_t n = 2 + uniform_index(rng, 300);
    for (std::size_t i = 0; i < n; ++i) {
      t.push_back(uniform01(rng) < 0.3 ? 1 : 0);
      p.push_back(uniform01(rng) < 0.4 ? 1 : 0);
    }
    std::size_t c[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < n; ++i) ++c[t[i]][p[i]];
    const auto conf = eval::confusion(t, p);
    bool same = true;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) same &= conf.counts[a][b] == c[a][b];
    }
    checks.expect(same, "confusion counts differ");
    auto f1 = [](double tp, double fp, double fn) { return tp + fp + fn == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn); };
    const double expected =
        50.0 * (f1(c[1][1], c[0][1], c[1][0]) + f1(c[0][0], c[1][0], c[0][1]));
    checks.expect(std::abs(eval::macro_f1(t, p) - expected) <= 1e-12 * 100.0, "macro F1 differs");
    const auto rec = eval::per_class_recall(t, p);
    auto ratio = [](double a, double b) { return b == 0 ? 0.0 : a / b; };
    checks.expect(rec[1] == ratio(c[1][1], c[1][1] + c[1][0]) && rec[0] == ratio(c[0][0], c[0][0] + c[0][1]),
                  "recall differs");
  }

  // PR AUC against exhaustive threshold enumeration.
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 19);
    std::vector<Label> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i < 2 ? static_cast<Label>(i) : (uniform01(rng) < 0.5 ? 1 : 0);
      s[i] = std::round(uniform01(rng) * 6.0) / 6.0;
    }
    const double got = eval::pr_curve(y, s).auc;
    checks.expect(std::abs(got - brute_step_auc(y, s)) <= 1e-12, "PR AUC differs from enumeration");
  }

  // MI against a hand-built contingency table.
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 30 + uniform_index(rng, 200);
    Matrix X(static_cast<Eigen::Index>(n), 1);
    std::vector<Label> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = uniform01(rng) < 0.4 ? 1 : 0;
      X(static_cast<Eigen::Index>(i), 0) = std::floor(8.0 * uniform01(rng)) + y[i] * uniform01(rng);
    }
    const std::size_t bins = 4;
    std::vector<double> col(X.data(), X.data() + n);
    std::vector<double> sorted(col);
    std::sort(sorted.begin(), sorted.end());
    double joint[4][2] = {};
    for (std::size_t i = 0; i < n; ++i) {
      const auto first = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), col[i]) - sorted.begin());
      joint[first * bins / n][y[i]] += 1.0 / static_cast<double>(n);
    }
    double mi = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      for (int l = 0; l < 2; ++l) {
        const double pb = joint[b][0] + joint[b][1];
        double pl = 0.0;
        for (std::size_t k = 0; k < bins; ++k) pl += joint[k][l];
        if (joint[b][l] > 0) mi += joint[b][l] * std::log(joint[b][l] / (pb * pl));
      }
    }
    const double got = select::mutual_information(X, y, {}, bins)[0].mi;
    checks.expect(std::abs(got - std::max(0.0, mi)) <= 1e-9, "MI differs from contingency table");
  }

  // SMOTE segments and parity.
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 20 + uniform_index(rng, 80);
    Matrix X(static_cast<Eigen::Index>(n), 3);
    std::vector<Label> y(n);
    std::size_t minority = 0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = (i < 2 || uniform01(rng) < 0.2) ? 1 : 0;
      minority += y[i];
      for (Eigen::Index j = 0; j < 3; ++j) X(static_cast<Eigen::Index>(i), j) = standard_normal(rng);
    }
    if (2 * minority >= n) continue;
    const auto r = resample::smote(X, y, {5, static_cast<std::uint64_t>(trial)});
    const auto ones = static_cast<std::size_t>(std::count(r.y.begin(), r.y.end(), 1));
    checks.expect(ones == n - minority && r.y.size() == 2 * (n - minority), "SMOTE counts not at parity");
    for (std::size_t s = 0; s < r.origins.size(); ++s) {
      const auto& o = r.origins[s];
      const Eigen::RowVectorXd a = X.row(static_cast<Eigen::Index>(o.base));
      const Eigen::RowVectorXd d = X.row(static_cast<Eigen::Index>(o.neighbor)) - a;
      const Eigen::RowVectorXd p = r.X.row(static_cast<Eigen::Index>(n + s));
      const double u = (p - a).dot(d) / d.squaredNorm();
      checks.expect((p - (a + u * d)).norm() < 1e-9 && u >= 0.0 && u < 1.0, "SMOTE row off its segment");
    }
  }

  // z-score moments.
  {
    UniformSeries s;
    for (int i = 0; i < 5000; ++i) s.values.push_back(40.0 + 7.0 * standard_normal(rng));
    const auto z = preprocess::zscore(s).series.values;
    double m = 0.0, v = 0.0;
    for (double x : z) m += x;
    m /= static_cast<double>(z.size());
    for (double x : z) v += (x - m) * (x - m);
    v = std::sqrt(v / static_cast<double>(z.size()));
    checks.expect(std::abs(m) <= 1e-9 && std::abs(v - 1.0) <= 1e-9, "z-score moments off");
  }

  // Interpolation against the two-point line.
  {
    SparseSeries sp;
    sp.start_ms = 0;
    const std::vector<std::optional<double>> vals = {1.0, std::nullopt, std::nullopt, 7.0, std::nullopt, -2.0};
    sp.values = vals;
    const auto u = preprocess::interpolate_time(sp).values;
    const double expected[] = {1.0, 3.0, 5.0, 7.0, 2.5, -2.0};
    bool ok = u.size() == 6;
    for (std::size_t i = 0; ok && i < 6; ++i) ok = std::abs(u[i] - expected[i]) <= 1e-12;
    checks.expect(ok, "interpolation differs from the line formula");
  }

  // Downsampling preserves the grand mean when every bin holds equally many samples.
  {
    RawTrace raw;
    double sum = 0.0;
    for (int i = 0; i < 200 * 600; ++i) {
      const double v = standard_normal(rng) * 3.0 + 10.0;
      raw.samples.push_back({static_cast<TimestampMs>(i) * 5, v});
      sum += v;
    }
    const auto ds = preprocess::downsample_mean(raw, 1.0);
    double dsum = 0.0;
    for (const auto& v : ds.values) dsum += v.value_or(0.0);
    checks.expect(std::abs(dsum / static_cast<double>(ds.values.size()) - sum / static_cast<double>(raw.samples.size())) <=
                      1e-9,
                  "downsampled grand mean differs");
  }

  return checks.outcome("F1/recall, PR AUC, MI, SMOTE, z-score, interpolation, downsample oracles agree");
}

// ---------------------------------------------------------------------------
// 5. Learners

Outcome criterion_learners() {
  Checks checks;
  Rng rng = make_rng(55);

  {  // MLP gradient check on a 2-3-2 network.
    auto net = learn::MlpNetwork::init(2, {3}, 2, rng);
    for (auto& b : net.biases) b.setConstant(0.1);
    Matrix X(8, 2);
    std::vector<Label> y;
    for (Eigen::Index r = 0; r < 8; ++r) {
      X(r, 0) = standard_normal(rng);
      X(r, 1) = standard_normal(rng);
      y.push_back(static_cast<Label>(r % 2));
    }
    learn::MlpGradients g;
    net.loss_and_gradient(X, y, 0.05, g);
    double diff2 = 0.0, norm2 = 0.0;
    auto probe = [&](double& w, double analytic) {
      const double keep = w, h = 1e-6;
      w = keep + h;
      const double up = net.loss(X, y, 0.05);
      w = keep - h;
      const double down = net.loss(X, y, 0.05);
      w = keep;
      const double numeric = (up - down) / (2 * h);
      diff2 += (numeric - analytic) * (numeric - analytic);
      norm2 += (std::abs(numeric) + std::abs(analytic)) * (std::abs(numeric) + std::abs(analytic));
    };
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      for (Eigen::Index i = 0; i < net.weights[l].size(); ++i) probe(net.weights[l].data()[i], g.weights[l].data()[i]);
      for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) probe(net.biases[l].data()[i], g.biases[l].data()[i]);
    }
    const double rel = std::sqrt(diff2) / std::sqrt(norm2);
    checks.expect(rel <= 1e-4, "MLP gradient relative error " + std::to_string(rel));
  }

  {  // PCA reconstruction with all components.
    Matrix X(100, 4);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = standard_normal(rng) * (1 + i % 4);
    learn::TransformSpec spec = learn::TransformSpec::defaults(learn::TransformKind::Pca);
    spec.components = 4;
    const auto pca = learn::Pca::fit(X, spec);
    checks.expect((pca.reconstruct(pca.apply(X)) - X).cwiseAbs().maxCoeff() <= 1e-8, "PCA reconstruction error");
  }

  {  // GaussianNB on the 1-D six-point example.
    Matrix X(6, 1);
    X << -1, -1.1, -0.9, 1, 0.9, 1.1;
    const std::vector<Label> y = {0, 0, 0, 1, 1, 1};
    const auto m = learn::GaussianNaiveBayes::fit(X, y, {});
    Matrix q(3, 1);
    q << 0.95, -1.0, 0.1;
    const Vector s = m.positive_score(q);
    const double var = 0.02 / 3.0;
    for (Eigen::Index i = 0; i < 3; ++i) {
      const double l0 = -0.5 * (q(i, 0) + 1) * (q(i, 0) + 1) / var;
      const double l1 = -0.5 * (q(i, 0) - 1) * (q(i, 0) - 1) / var;
      checks.expect(std::abs(s(i) - 1.0 / (1.0 + std::exp(l0 - l1))) <= 1e-9, "GaussianNB posterior");
    }
    const auto pred = m.predict(q);
    checks.expect(pred[0] == 1 && pred[1] == 0, "GaussianNB predictions");
  }

  {  // QDA on a six-point 2-D example.
    Matrix X(6, 2);
    X << 0, 0, 2, 1, 1, 3, 5, 5, 7, 5, 6, 8;
    const std::vector<Label> y = {0, 0, 0, 1, 1, 1};
    const auto m = learn::Qda::fit(X, y, {});
    Matrix q(2, 2);
    q << 2, 2, 5.5, 6;
    const Vector s = m.positive_score(q);
    for (Eigen::Index i = 0; i < 2; ++i) {
      double lj[2];
      for (int c = 0; c < 2; ++c) {
        const Eigen::Matrix<double, 3, 2> P = X.middleRows(3 * c, 3);
        const Eigen::RowVector2d mu = P.colwise().mean();
        const Eigen::Matrix<double, 3, 2> C = P.rowwise() - mu;
        Eigen::Matrix2d cov = C.transpose() * C / 2.0;
        cov.diagonal().array() += 1e-6 * cov.trace() / 2.0;
        const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
        Eigen::Matrix2d inv;
        inv << cov(1, 1), -cov(0, 1), -cov(1, 0), cov(0, 0);
        inv /= det;
        const Eigen::Vector2d d = (q.row(i) - mu).transpose();
        lj[c] = -0.5 * (d.dot(inv * d) + std::log(det));
      }
      checks.expect(std::abs(s(i) - 1.0 / (1.0 + std::exp(lj[0] - lj[1]))) <= 1e-9, "QDA posterior");
    }
  }

  {  // Forest training accuracy non-decreasing in tree count.
    Matrix X(80, 2);
    std::vector<Label> y;
    for (Eigen::Index r = 0; r < 80; ++r) {
      const Label l = r < 40 ? 0 : 1;
      X(r, 0) = 3.0 * l + standard_normal(rng);
      X(r, 1) = 3.0 * l + standard_normal(rng);
      y.push_back(l);
    }
    for (auto kind : {learn::ClassifierKind::RandomForest, learn::ClassifierKind::ExtraTrees}) {
      double prev = 0.0;
      for (int trees : {1, 16, 256}) {
        auto spec = learn::ClassifierSpec::defaults(kind, 3);
        spec.params = learn::TreeParams{trees, 0, 1};
        const auto pred = learn::fit(spec, X, y).predict(X);
        double acc = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) acc += pred[i] == y[i];
        acc /= static_cast<double>(y.size());
        checks.expect(acc >= prev, std::string(learn::to_string(kind)) + " accuracy fell at " + std::to_string(trees));
        prev = acc;
      }
    }
  }
  return checks.outcome("MLP gradients, PCA reconstruction, NB/QDA posteriors, forest monotonicity");
}

// ---------------------------------------------------------------------------
// 6. Feature selection on planted features

Outcome criterion_selection() {
  Rng rng = make_rng(66);
  const std::size_t planted = 3, noise = 17, rows = 1500;
  features::FeatureMatrix m;
  m.X.resize(rows, planted + noise);
  for (std::size_t r = 0; r < rows; ++r) {
    const Label l = r % 3 == 0 ? 1 : 0;
    m.y.push_back(l);
    for (std::size_t j = 0; j < planted + noise; ++j) {
      const double shift = j < planted ? 1.6 - 0.3 * static_cast<double>(j) : 0.0;
      m.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = shift * l + standard_normal(rng);
    }
  }
  for (std::size_t j = 0; j < planted + noise; ++j) m.names.push_back((j < planted ? "info" : "noise") + std::to_string(j));

  select::SweepOptions opts;
  opts.max_k = planted + noise;
  opts.protocol.plan.seed = 66;
  const learn::PipelineSpec rf{{}, learn::ClassifierSpec::defaults(learn::ClassifierKind::RandomForest, 66)};
  const auto sweep = select::sweep_top_k(m, rf, opts);
  const auto& at_k = sweep.entries[planted - 1];
  const auto& all = sweep.entries.back();
  const double tol = std::max(at_k.std_macro_f1, all.std_macro_f1);
  const double diff = at_k.mean_macro_f1 - all.mean_macro_f1;
  const bool pass = std::abs(diff) <= tol || diff > 0.0;

  std::size_t planted_top = 0;
  for (std::size_t i = 0; i < planted; ++i) planted_top += sweep.ranking[i].column < planted;
  return {pass, "F1(k=3) " + fmt(at_k.mean_macro_f1) + " +/- " + fmt(at_k.std_macro_f1) + " vs all-features " +
                    fmt(all.mean_macro_f1) + " +/- " + fmt(all.std_macro_f1) + " (validation " +
                    fmt(at_k.val_mean_macro_f1) + " vs " + fmt(all.val_mean_macro_f1) +
                    "); planted features in MI top 3: " + std::to_string(planted_top)};
}

// ---------------------------------------------------------------------------
// 7. Imbalance bookkeeping

Outcome criterion_imbalance() {
  Checks checks;
  // Majority shares reported for the field data (percent).
  const std::pair<Task, double> targets[] = {
      {Task::WarmCold, 79.4}, {Task::DayNight, 61.0}, {Task::RainDry, 95.9}, {Task::WindyCalm, 93.6}};
  synth::SynthConfig cfg;
  cfg.days = 30;
  cfg.seed = 77;
  const synth::Weather weather(cfg);
  const auto env = weather.env_series(cfg.env_rate_hz, cfg.seed);
  UniformSeries flat;
  flat.start_ms = cfg.start_ms;
  flat.values.assign(weather.hours() * 3600, 0.0);
  labeling::WindowOptions wopts;
  wopts.local_offset_hours = cfg.local_offset_hours;
  std::string detail;
  for (const auto& [task, target] : targets) {
    const auto set = labeling::extract_windows(flat, env, labeling::rule_for(task), wopts);
    std::size_t majority = 0;
    for (const auto& w : set.windows) majority += w.label == 0;
    const double share = 100.0 * static_cast<double>(majority) / static_cast<double>(set.windows.size());
    checks.expect(std::abs(share - target) <= 2.0,
                  std::string(to_string(task)) + " share " + fmt(share) + " vs " + fmt(target, 1));
    detail += std::string(class_name(task, 0)) + " " + fmt(share, 1) + "% ";
  }

  // PR baseline of the end-to-end report equals the test-set minority prevalence.
  const auto data = features::read_matrix_csv(signal_run_dir() / "features" / "rain_dry_stem.csv");
  eval::SplitPlan plan;
  plan.seed = 7;
  const auto holdout = eval::test_holdout(data.y, plan);
  const Label minority = learn::minority_label(data.y);
  std::size_t count = 0;
  for (auto i : holdout.val) count += data.y[i] == minority;
  const double prevalence = static_cast<double>(count) / static_cast<double>(holdout.val.size());
  const double baseline = read_json(signal_run_dir() / "reports" / "rain_dry_stem_rf.json").at("baseline").get<double>();
  checks.expect(baseline == prevalence, "baseline " + std::to_string(baseline) + " != prevalence " + std::to_string(prevalence));
  return checks.outcome(detail + "; rain PR baseline " + fmt(baseline, 4) + " = prevalence");
}

// ---------------------------------------------------------------------------
// 8. Determinism

Outcome criterion_determinism() {
  Checks checks;
  auto config = [](const fs::path& out) {
    return json{{"seed", 99},
                {"output_dir", out.string()},
                {"input", {{"synthetic", {{"plants", 1}, {"days", 3}, {"raw_rate_hz", 20.0}, {"channels", {"stem"}}}}}},
                {"tasks", {"day_night"}},
                {"channels", {"stem"}},
                {"classifiers", {"gnb", "rf", "automl"}},
                {"automl", {{"budget", 20}, {"patience", 5}}},
                {"selection", {{"k", 5}, {"classifier", "gnb"}}},
                {"profile", true}};
  };
  const auto a = experiment::run_experiment(experiment::ExperimentConfig::from_json(config(g_work / "det_a")));
  const auto b = experiment::run_experiment(experiment::ExperimentConfig::from_json(config(g_work / "det_b")));
  checks.expect(a.outputs_hash == b.outputs_hash, "outputs hash differs");
  std::size_t compared = 0;
  for (const auto& art : a.artifacts) {
    const bool metric = art.rfind("reports/", 0) == 0 || art.rfind("pr/", 0) == 0 || art.rfind("select/", 0) == 0 ||
                        art.rfind("profile/", 0) == 0 || art.find("_trace.jsonl") != std::string::npos;
    if (!metric) continue;
    ++compared;
    checks.expect(slurp(g_work / "det_a" / art) == slurp(g_work / "det_b" / art), art + " differs");
  }
  checks.expect(compared >= 5, "too few metric files compared");

  Rng rng = make_rng(88);
  Matrix X(40, 4), T(25, 4);
  std::vector<Label> y;
  for (Eigen::Index r = 0; r < 40; ++r) {
    y.push_back(r < 15 ? 1 : 0);
    for (Eigen::Index j = 0; j < 4; ++j) X(r, j) = standard_normal(rng) + (r < 15 ? 1.0 : 0.0);
  }
  for (Eigen::Index i = 0; i < T.size(); ++i) T.data()[i] = standard_normal(rng);
  for (auto kind : learn::kAllClassifiers) {
    learn::PipelineSpec spec{{learn::TransformSpec::defaults(learn::TransformKind::Normalizer),
                              learn::TransformSpec::defaults(learn::TransformKind::Pca)},
                             learn::ClassifierSpec::defaults(kind, 5)};
    const auto model = learn::fit(spec, X, y);
    const fs::path p = g_work / ("model_" + std::string(learn::to_string(kind)) + ".json");
    model.save(p);
    const auto loaded = learn::TrainedPipeline::load(p);
    checks.expect(loaded.predict_score(T) == model.predict_score(T), std::string(learn::to_string(kind)) + " save/load");
    checks.expect(learn::fit(spec, X, y).predict_score(T) == model.predict_score(T),
                  std::string(learn::to_string(kind)) + " refit");
  }
  return checks.outcome(std::to_string(compared) + " metric files byte-identical, outputs hash " + a.outputs_hash +
                        "; 8 classifiers save/load bit-exact");
}

}  // namespace

// Exit status: 1 when a criterion could not be evaluated (it threw). FAIL
// verdicts are reported but only change the status under --strict.
int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::string(argv[1]) == "--strict";
  g_work = fs::temp_directory_path() / ("phyto_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(g_work);
  fs::create_directories(g_work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"field-scale table (informational)", criterion_field_scale},
      {"synthetic end-to-end", criterion_synthetic},
      {"automl contract", criterion_automl},
      {"oracle equivalence", criterion_oracles},
      {"learner correctness", criterion_learners},
      {"feature selection on planted features", criterion_selection},
      {"imbalance bookkeeping", criterion_imbalance},
      {"determinism", criterion_determinism},
  };
  int failures = 0, errors = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
      ++errors;
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " " << criteria[i].first << ": " << o.detail
              << " [" << fmt(seconds_since(t0), 1) << " s]" << std::endl;
  }
  std::error_code ec;
  fs::remove_all(g_work, ec);
  std::cout << criteria.size() - static_cast<std::size_t>(failures) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  if (errors > 0) return 1;
  return strict && failures > 0 ? 1 : 0;
}
