#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "phyto/features.hpp"
#include "phyto/learn/pipeline.hpp"
#include "phyto/series.hpp"

namespace phyto::eval {

struct IndexSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// `n_splits` independent stratified shuffles. Each class contributes
/// round(n_c * val_fraction) rows (at least 1, at most n_c - 1) to validation.
/// Indices refer to positions in `labels`.
std::vector<IndexSplit> stratified_shuffle_splits(const std::vector<Label>& labels, std::size_t n_splits,
                                                  double val_fraction, std::uint64_t seed);

struct SplitPlan {
  double test_fraction = 0.2;
  std::size_t n_splits = 10;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
};

/// counts[true][predicted]
struct Confusion {
  std::array<std::array<std::size_t, 2>, 2> counts{};

  Confusion& operator+=(const Confusion& o);
};

Confusion confusion(std::span<const Label> y_true, std::span<const Label> y_pred);

/// Unweighted mean of both classes' F1, in percent. A class with no true and
/// no predicted rows scores 0.
double macro_f1(std::span<const Label> y_true, std::span<const Label> y_pred);
double macro_f1(const Confusion& c);

/// Recall of label 0 and label 1.
std::array<double, 2> per_class_recall(std::span<const Label> y_true, std::span<const Label> y_pred);
std::array<double, 2> per_class_recall(const Confusion& c);

struct PrPoint {
  double threshold = 0.0;  ///< +inf for the (recall 0, precision 1) endpoint
  double precision = 0.0;
  double recall = 0.0;
};

struct PrCurve {
  /// Descending threshold order, starting at the (0, 1) endpoint.
  std::vector<PrPoint> points;
  /// Step-wise area: sum over points of (R_i - R_{i-1}) * P_i.
  double auc = 0.0;
  /// Positive prevalence.
  double baseline = 0.0;
};

/// Rows with label == `positive` are positives; a row is predicted positive
/// when its score >= the threshold.
PrCurve pr_curve(std::span<const Label> y_true, std::span<const double> scores, Label positive = 1);

struct DailyProfile {
  std::vector<double> mean;  ///< 86400 entries
  std::vector<double> std;   ///< population std across days
  std::size_t days = 0;
};

inline constexpr std::size_t kSecondsPerDay = 86400;

/// Pointwise mean/std across complete 1 Hz days.
DailyProfile compute_daily_profile(const std::vector<UniformSeries>& days);

/// Cuts gap-free segments into complete days that start at midnight (after
/// `day_offset_hours`); partial days are dropped.
std::vector<UniformSeries> split_days(const std::vector<UniformSeries>& segments, double day_offset_hours = 0.0);

/// The once-per-experiment stratified test hold-out: `train` is the pool the
/// shuffle splits draw from, `val` is the test set.
IndexSplit test_holdout(const std::vector<Label>& labels, const SplitPlan& plan);

/// Picks feature columns for one split from its (normalized) training rows.
using ColumnSelector = std::function<std::vector<std::size_t>(std::size_t split, const Matrix& X_train,
                                                              const std::vector<Label>& y_train)>;

struct ProtocolOptions {
  SplitPlan plan;
  bool smote = true;
  std::size_t smote_k = 5;
  ColumnSelector select_columns;  ///< empty = all columns
};

struct SplitScore {
  double val_macro_f1 = 0.0;
  double test_macro_f1 = 0.0;
};

struct EvalReport {
  std::string pipeline;
  Task task = Task::DayNight;
  Label minority = 1;
  std::size_t n_rows = 0;
  std::size_t n_test = 0;
  std::size_t n_columns = 0;
  std::vector<SplitScore> splits;
  double test_macro_f1_mean = 0.0;
  double test_macro_f1_std = 0.0;
  double val_macro_f1_mean = 0.0;
  double val_macro_f1_std = 0.0;
  Confusion test_confusion;
  std::array<double, 2> per_class_recall{};
  PrCurve pr;

  nlohmann::json to_json() const;
};

/// Mean and population standard deviation.
std::pair<double, double> mean_std(std::span<const double> v);

/// Hold out a stratified test set once, then for each shuffle split of the
/// remaining pool: fit min-max on the split's training rows, optionally pick
/// columns, SMOTE the training rows, train, and score validation and test.
EvalReport evaluate_protocol(const features::FeatureMatrix& data, const learn::PipelineSpec& spec,
                             const ProtocolOptions& opts);

void write_pr_csv(const std::filesystem::path& path, const PrCurve& pr);
void write_profile_csv(const std::filesystem::path& path, const DailyProfile& profile);

}  // namespace phyto::eval
