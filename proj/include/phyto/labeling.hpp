#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "phyto/ingest.hpp"
#include "phyto/series.hpp"

namespace phyto::labeling {

/// Daily time-of-day window [start_hour, end_hour) in local time.
struct HourRange {
  int start_hour = 8;
  int end_hour = 20;
};

struct LabelRule {
  Task task = Task::DayNight;
  ingest::EnvField field = ingest::EnvField::SolarIrradiance;
  double threshold = 0.0;
  std::optional<HourRange> time_restriction;
};

/// Thresholds of the four binary tasks: irradiance 50 W/m2, precipitation
/// 0 mm, air temperature 25 C (08-20 h), wind speed 1.25 m/s (08-20 h).
LabelRule rule_for(Task task);

/// value > threshold -> positive class (1); value <= threshold -> negative (0).
Label classify_env_sample(const LabelRule& rule, std::optional<double> value);

enum class Agreement { Purity, Majority };

struct WindowOptions {
  /// Offset of local time from UTC used by the time-of-day restriction.
  double local_offset_hours = 1.0;
  Agreement agreement = Agreement::Purity;
  /// 0.1 Hz over one hour.
  std::size_t min_env_samples_per_hour = 360;
};

inline constexpr std::size_t kWindowSeconds = 3600;

struct LabeledWindow {
  std::string plant_id;
  Channel channel = Channel::Stem;
  TimestampMs start_ms = 0;
  Task task = Task::DayNight;
  Label label = 0;
  std::vector<double> values;  ///< kWindowSeconds samples at 1 Hz
};

struct SkipReport {
  std::size_t candidate_hours = 0;
  std::size_t emitted = 0;
  std::size_t time_restricted = 0;
  std::size_t env_incomplete = 0;
  std::size_t impure = 0;
  std::size_t signal_incomplete = 0;

  SkipReport& operator+=(const SkipReport& o);
  nlohmann::json to_json() const;
};

struct WindowSet {
  std::vector<LabeledWindow> windows;
  SkipReport skips;
};

/// Cuts hour-aligned 1-h windows from a 1 Hz series and labels each hour whose
/// environment samples agree on the rule's class.
WindowSet extract_windows(const UniformSeries& series, const ingest::EnvSeries& env, const LabelRule& rule,
                          const WindowOptions& opts = {});
WindowSet extract_windows(const std::vector<UniformSeries>& segments, const ingest::EnvSeries& env,
                          const LabelRule& rule, const WindowOptions& opts = {});

void write_windows_csv(const std::filesystem::path& path, const std::vector<LabeledWindow>& windows);
std::vector<LabeledWindow> read_windows_csv(const std::filesystem::path& path);

/// Task owning a class name ("rain" -> RainDry).
Task task_of_class(std::string_view class_name);

}  // namespace phyto::labeling
