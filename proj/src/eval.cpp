#include "phyto/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "phyto/csv.hpp"
#include "phyto/error.hpp"
#include "phyto/resample.hpp"
#include "phyto/rng.hpp"

namespace phyto::eval {

std::vector<IndexSplit> stratified_shuffle_splits(const std::vector<Label>& labels, std::size_t n_splits,
                                                  double val_fraction, std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    fail(ErrorCode::InvalidArgument, "validation fraction must lie in (0, 1)");
  }
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) fail(ErrorCode::InvalidArgument, "labels must be 0 or 1");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (std::size_t c = 0; c < 2; ++c) {
    if (by_class[c].size() < 2) {
      fail(ErrorCode::ClassTooSmall, "class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                                         " samples; stratified splitting needs at least 2");
    }
  }
  std::vector<IndexSplit> out;
  out.reserve(n_splits);
  for (std::size_t s = 0; s < n_splits; ++s) {
    Rng rng = make_rng(seed, s);
    IndexSplit split;
    for (std::size_t c = 0; c < 2; ++c) {
      std::vector<std::size_t> rows = by_class[c];
      for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[uniform_index(rng, i)]);
      const double wanted = std::round(static_cast<double>(rows.size()) * val_fraction);
      const std::size_t n_val = std::clamp<std::size_t>(static_cast<std::size_t>(wanted), 1, rows.size() - 1);
      split.val.insert(split.val.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_val));
      split.train.insert(split.train.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_val), rows.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    out.push_back(std::move(split));
  }
  return out;
}

IndexSplit test_holdout(const std::vector<Label>& labels, const SplitPlan& plan) {
  return stratified_shuffle_splits(labels, 1, plan.test_fraction, mix_seed(plan.seed, 0x7e57))[0];
}

Confusion& Confusion::operator+=(const Confusion& o) {
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) counts[i][j] += o.counts[i][j];
  }
  return *this;
}

Confusion confusion(std::span<const Label> y_true, std::span<const Label> y_pred) {
  if (y_true.size() != y_pred.size()) fail(ErrorCode::LengthMismatch, "y_true and y_pred lengths differ");
  Confusion c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if ((y_true[i] != 0 && y_true[i] != 1) || (y_pred[i] != 0 && y_pred[i] != 1)) {
      fail(ErrorCode::InvalidArgument, "labels must be 0 or 1");
    }
    ++c.counts[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])];
  }
  return c;
}

double macro_f1(const Confusion& c) {
  double sum = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    const double tp = static_cast<double>(c.counts[k][k]);
    const double fn = static_cast<double>(c.counts[k][1 - k]);
    const double fp = static_cast<double>(c.counts[1 - k][k]);
    const double denom = 2.0 * tp + fp + fn;
    sum += denom > 0.0 ? 2.0 * tp / denom : 0.0;
  }
  return 100.0 * sum / 2.0;
}

double macro_f1(std::span<const Label> y_true, std::span<const Label> y_pred) {
  return macro_f1(confusion(y_true, y_pred));
}

std::array<double, 2> per_class_recall(const Confusion& c) {
  std::array<double, 2> out{};
  for (std::size_t k = 0; k < 2; ++k) {
    const double total = static_cast<double>(c.counts[k][0] + c.counts[k][1]);
    out[k] = total > 0.0 ? static_cast<double>(c.counts[k][k]) / total : 0.0;
  }
  return out;
}

std::array<double, 2> per_class_recall(std::span<const Label> y_true, std::span<const Label> y_pred) {
  return per_class_recall(confusion(y_true, y_pred));
}

PrCurve pr_curve(std::span<const Label> y_true, std::span<const double> scores, Label positive) {
  if (y_true.size() != scores.size()) fail(ErrorCode::LengthMismatch, "labels and scores lengths differ");
  std::size_t pos = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (!std::isfinite(scores[i])) fail(ErrorCode::NonFiniteInput, "score is not finite");
    pos += y_true[i] == positive ? 1 : 0;
  }
  if (pos == 0 || pos == y_true.size()) fail(ErrorCode::SingleClassInput, "PR curve needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  PrCurve out;
  out.baseline = static_cast<double>(pos) / static_cast<double>(y_true.size());
  out.points.push_back({std::numeric_limits<double>::infinity(), 1.0, 0.0});
  std::size_t tp = 0, fp = 0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double thr = scores[order[i]];
    while (i < order.size() && scores[order[i]] == thr) {
      (y_true[order[i]] == positive ? tp : fp) += 1;
      ++i;
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(pos);
    out.points.push_back({thr, precision, recall});
    out.auc += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return out;
}

DailyProfile compute_daily_profile(const std::vector<UniformSeries>& days) {
  if (days.empty()) fail(ErrorCode::NoDays, "daily profile needs at least one day");
  for (const auto& d : days) {
    if (d.values.size() != kSecondsPerDay || d.rate_hz != 1.0) {
      fail(ErrorCode::InvalidArgument, "every day must hold 86400 samples at 1 Hz");
    }
  }
  DailyProfile p;
  p.days = days.size();
  p.mean.assign(kSecondsPerDay, 0.0);
  p.std.assign(kSecondsPerDay, 0.0);
  const double n = static_cast<double>(days.size());
  for (std::size_t s = 0; s < kSecondsPerDay; ++s) {
    double sum = 0.0;
    for (const auto& d : days) sum += d.values[s];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& d : days) ss += (d.values[s] - mean) * (d.values[s] - mean);
    p.mean[s] = mean;
    p.std[s] = std::sqrt(ss / n);
  }
  return p;
}

std::vector<UniformSeries> split_days(const std::vector<UniformSeries>& segments, double day_offset_hours) {
  const auto offset = static_cast<TimestampMs>(std::llround(day_offset_hours * static_cast<double>(kMsPerHour)));
  std::vector<UniformSeries> out;
  for (const auto& seg : segments) {
    if (seg.rate_hz != 1.0 || seg.values.empty()) continue;
    TimestampMs day_start = floor_div(seg.start_ms + offset + kMsPerDay - 1, kMsPerDay) * kMsPerDay - offset;
    for (; day_start + kMsPerDay <= seg.end_ms(); day_start += kMsPerDay) {
      const TimestampMs rel = day_start - seg.start_ms;
      if (rel % kMsPerSecond != 0) break;
      const auto first = static_cast<std::size_t>(rel / kMsPerSecond);
      UniformSeries day = seg;
      day.start_ms = day_start;
      day.values.assign(seg.values.begin() + static_cast<std::ptrdiff_t>(first),
                        seg.values.begin() + static_cast<std::ptrdiff_t>(first + kSecondsPerDay));
      out.push_back(std::move(day));
    }
  }
  return out;
}

std::pair<double, double> mean_std(std::span<const double> v) {
  if (v.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

namespace {

Matrix gather_rows(const Matrix& X, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Matrix gather_cols(const Matrix& X, std::span<const std::size_t> cols) {
  Matrix out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = X.col(static_cast<Eigen::Index>(cols[i]));
  return out;
}

std::vector<Label> gather_labels(const std::vector<Label>& y, std::span<const std::size_t> rows) {
  std::vector<Label> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(y[r]);
  return out;
}

}  // namespace

EvalReport evaluate_protocol(const features::FeatureMatrix& data, const learn::PipelineSpec& spec,
                             const ProtocolOptions& opts) {
  const auto& plan = opts.plan;
  EvalReport report;
  report.pipeline = spec.describe();
  report.task = data.task;
  report.minority = learn::minority_label(data.y);
  report.n_rows = data.rows();

  const IndexSplit holdout = test_holdout(data.y, plan);
  const std::vector<std::size_t>& pool = holdout.train;
  const std::vector<std::size_t>& test = holdout.val;
  report.n_test = test.size();
  const std::vector<Label> y_pool = gather_labels(data.y, pool);
  const std::vector<Label> y_test = gather_labels(data.y, test);
  const Matrix X_test_raw = gather_rows(data.X, test);

  const auto splits = stratified_shuffle_splits(y_pool, plan.n_splits, plan.validation_fraction, mix_seed(plan.seed, 1));
  Vector score_sum = Vector::Zero(static_cast<Eigen::Index>(test.size()));
  std::vector<double> val_scores, test_scores;
  for (std::size_t s = 0; s < splits.size(); ++s) {
    std::vector<std::size_t> train_rows, val_rows;
    for (std::size_t i : splits[s].train) train_rows.push_back(pool[i]);
    for (std::size_t i : splits[s].val) val_rows.push_back(pool[i]);

    const Matrix X_train_raw = gather_rows(data.X, train_rows);
    const auto mm = features::fit_minmax(X_train_raw);
    Matrix X_train = features::apply_minmax(mm, X_train_raw);
    Matrix X_val = features::apply_minmax(mm, gather_rows(data.X, val_rows));
    Matrix X_test = features::apply_minmax(mm, X_test_raw);
    std::vector<Label> y_train = gather_labels(data.y, train_rows);
    const std::vector<Label> y_val = gather_labels(data.y, val_rows);

    if (opts.select_columns) {
      const auto cols = opts.select_columns(s, X_train, y_train);
      X_train = gather_cols(X_train, cols);
      X_val = gather_cols(X_val, cols);
      X_test = gather_cols(X_test, cols);
    }
    report.n_columns = static_cast<std::size_t>(X_train.cols());
    if (opts.smote) {
      auto balanced = resample::smote(X_train, y_train, {opts.smote_k, mix_seed(plan.seed, 100 + s)});
      X_train = std::move(balanced.X);
      y_train = std::move(balanced.y);
    }

    learn::PipelineSpec split_spec = spec;
    split_spec.classifier.seed = mix_seed(spec.classifier.seed, s);
    const auto model = learn::fit(split_spec, X_train, y_train);

    const auto val_pred = model.predict(X_val);
    const auto test_pred = model.predict(X_test);
    val_scores.push_back(macro_f1(y_val, val_pred));
    test_scores.push_back(macro_f1(y_test, test_pred));
    report.splits.push_back({val_scores.back(), test_scores.back()});
    report.test_confusion += confusion(y_test, test_pred);
    score_sum += model.predict_score(X_test);
  }
  std::tie(report.test_macro_f1_mean, report.test_macro_f1_std) = mean_std(test_scores);
  std::tie(report.val_macro_f1_mean, report.val_macro_f1_std) = mean_std(val_scores);
  report.per_class_recall = per_class_recall(report.test_confusion);
  const Vector mean_score = score_sum / static_cast<double>(std::max<std::size_t>(1, splits.size()));
  report.pr = pr_curve(y_test, std::span<const double>(mean_score.data(), static_cast<std::size_t>(mean_score.size())),
                       report.minority);
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json splits_json = nlohmann::json::array();
  for (const auto& s : splits) splits_json.push_back({{"val_macro_f1", s.val_macro_f1}, {"test_macro_f1", s.test_macro_f1}});
  nlohmann::json recall;
  recall[std::string(class_name(task, 0))] = per_class_recall[0];
  recall[std::string(class_name(task, 1))] = per_class_recall[1];
  const auto& c = test_confusion.counts;
  return {{"pipeline", pipeline},
          {"task", to_string(task)},
          {"minority_class", class_name(task, minority)},
          {"rows", n_rows},
          {"test_rows", n_test},
          {"columns", n_columns},
          {"macro_f1_mean", test_macro_f1_mean},
          {"macro_f1_std", test_macro_f1_std},
          {"macro_f1_unit", "percent"},
          {"test", {{"macro_f1_mean", test_macro_f1_mean}, {"macro_f1_std", test_macro_f1_std}}},
          {"validation", {{"macro_f1_mean", val_macro_f1_mean}, {"macro_f1_std", val_macro_f1_std}}},
          {"splits", splits_json},
          {"per_class_recall", recall},
          {"confusion", {{"true_0", {c[0][0], c[0][1]}}, {"true_1", {c[1][0], c[1][1]}}}},
          {"pr_auc", pr.auc},
          {"baseline", pr.baseline}};
}

void write_pr_csv(const std::filesystem::path& path, const PrCurve& pr) {
  std::string out = "threshold,precision,recall\n";
  for (const auto& p : pr.points) {
    out += std::isinf(p.threshold) ? std::string("inf") : csv::format_double(p.threshold);
    out += ',' + csv::format_double(p.precision) + ',' + csv::format_double(p.recall) + '\n';
  }
  csv::write_file(path, out);
}

void write_profile_csv(const std::filesystem::path& path, const DailyProfile& profile) {
  std::string out = "second_of_day,mean,std\n";
  for (std::size_t s = 0; s < profile.mean.size(); ++s) {
    out += std::to_string(s) + ',' + csv::format_double(profile.mean[s]) + ',' + csv::format_double(profile.std[s]) + '\n';
  }
  csv::write_file(path, out);
}

}  // namespace phyto::eval
