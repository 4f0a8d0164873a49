#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace phyto {

/// UTC epoch milliseconds.
using TimestampMs = std::int64_t;

/// Binary class label: 1 = positive class of the task (day, rain, warm, windy),
/// 0 = negative class.
using Label = int;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr TimestampMs kMsPerSecond = 1000;
inline constexpr TimestampMs kMsPerHour = 3600 * kMsPerSecond;
inline constexpr TimestampMs kMsPerDay = 24 * kMsPerHour;

enum class Channel { Stem, Leaf };

std::string_view to_string(Channel c);
Channel parse_channel(std::string_view s);

enum class Task { DayNight, RainDry, WarmCold, WindyCalm };

inline constexpr std::array<Task, 4> kAllTasks = {Task::DayNight, Task::RainDry, Task::WarmCold,
                                                  Task::WindyCalm};

/// Stable identifier used in file names and configs, e.g. "day_night".
std::string_view to_string(Task t);
Task parse_task(std::string_view s);

/// Class name for a label of the task ("day" for DayNight label 1, ...).
std::string_view class_name(Task t, Label label);
Label parse_class_name(Task t, std::string_view name);

/// Floor division for timestamps that may be negative.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

/// "YYYY-MM-DD" of the UTC day number (days since 1970-01-01).
std::string format_day(std::int64_t day_number);

}  // namespace phyto
