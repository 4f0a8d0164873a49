#include "phyto/types.hpp"

#include <chrono>
#include <cstdio>

#include "phyto/error.hpp"

namespace phyto {

std::string_view to_string(Channel c) { return c == Channel::Stem ? "stem" : "leaf"; }

Channel parse_channel(std::string_view s) {
  if (s == "stem") return Channel::Stem;
  if (s == "leaf") return Channel::Leaf;
  fail(ErrorCode::InvalidArgument, "unknown channel '" + std::string(s) + "'");
}

std::string_view to_string(Task t) {
  switch (t) {
    case Task::DayNight: return "day_night";
    case Task::RainDry: return "rain_dry";
    case Task::WarmCold: return "warm_cold";
    case Task::WindyCalm: return "windy_calm";
  }
  return "";
}

Task parse_task(std::string_view s) {
  for (Task t : kAllTasks) {
    if (to_string(t) == s) return t;
  }
  fail(ErrorCode::InvalidArgument, "unknown task '" + std::string(s) + "'");
}

std::string_view class_name(Task t, Label label) {
  static constexpr std::array<std::array<std::string_view, 2>, 4> names = {{
      {"night", "day"},
      {"dry", "rain"},
      {"cold", "warm"},
      {"calm", "windy"},
  }};
  return names[static_cast<std::size_t>(t)][label == 1 ? 1 : 0];
}

Label parse_class_name(Task t, std::string_view name) {
  if (name == class_name(t, 1)) return 1;
  if (name == class_name(t, 0)) return 0;
  fail(ErrorCode::InvalidArgument,
       "class '" + std::string(name) + "' does not belong to task " + std::string(to_string(t)));
}

std::string format_day(std::int64_t day_number) {
  const std::chrono::sys_days d{std::chrono::days{day_number}};
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace phyto
