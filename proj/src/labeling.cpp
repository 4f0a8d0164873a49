#include "phyto/labeling.hpp"

#include <algorithm>
#include <cmath>

#include "phyto/csv.hpp"
#include "phyto/error.hpp"

namespace phyto::labeling {

using ingest::EnvField;

LabelRule rule_for(Task task) {
  switch (task) {
    case Task::DayNight: return {task, EnvField::SolarIrradiance, 50.0, std::nullopt};
    case Task::RainDry: return {task, EnvField::Precipitation, 0.0, std::nullopt};
    case Task::WarmCold: return {task, EnvField::AirTemp, 25.0, HourRange{8, 20}};
    case Task::WindyCalm: return {task, EnvField::WindSpeed, 1.25, HourRange{8, 20}};
  }
  fail(ErrorCode::InvalidArgument, "unknown task");
}

Label classify_env_sample(const LabelRule& rule, std::optional<double> value) {
  if (!value) {
    fail(ErrorCode::MissingValue, std::string(ingest::column_name(rule.field)) + " missing");
  }
  return *value > rule.threshold ? 1 : 0;
}

SkipReport& SkipReport::operator+=(const SkipReport& o) {
  candidate_hours += o.candidate_hours;
  emitted += o.emitted;
  time_restricted += o.time_restricted;
  env_incomplete += o.env_incomplete;
  impure += o.impure;
  signal_incomplete += o.signal_incomplete;
  return *this;
}

nlohmann::json SkipReport::to_json() const {
  return {{"candidate_hours", candidate_hours}, {"emitted", emitted},
          {"time_restricted", time_restricted}, {"env_incomplete", env_incomplete},
          {"impure", impure},                   {"signal_incomplete", signal_incomplete}};
}

WindowSet extract_windows(const UniformSeries& series, const ingest::EnvSeries& env, const LabelRule& rule,
                          const WindowOptions& opts) {
  if (series.rate_hz != 1.0) fail(ErrorCode::InvalidArgument, "windows are cut from 1 Hz series");
  WindowSet out;
  if (series.values.empty()) return out;

  const TimestampMs local_offset =
      static_cast<TimestampMs>(std::llround(opts.local_offset_hours * static_cast<double>(kMsPerHour)));
  const TimestampMs first_hour = floor_div(series.start_ms + kMsPerHour - 1, kMsPerHour) * kMsPerHour;
  const TimestampMs series_end = series.end_ms();

  for (TimestampMs h = first_hour; h < series_end; h += kMsPerHour) {
    ++out.skips.candidate_hours;
    if (rule.time_restriction) {
      const auto local_hour = static_cast<int>(((floor_div(h + local_offset, kMsPerHour) % 24) + 24) % 24);
      if (local_hour < rule.time_restriction->start_hour || local_hour >= rule.time_restriction->end_hour) {
        ++out.skips.time_restricted;
        continue;
      }
    }

    auto lo = std::lower_bound(env.samples.begin(), env.samples.end(), h,
                               [](const ingest::EnvSample& s, TimestampMs t) { return s.timestamp_ms < t; });
    auto hi = std::lower_bound(lo, env.samples.end(), h + kMsPerHour,
                               [](const ingest::EnvSample& s, TimestampMs t) { return s.timestamp_ms < t; });
    const auto n_env = static_cast<std::size_t>(hi - lo);
    const bool all_present = std::all_of(lo, hi, [&](const auto& s) { return s.get(rule.field).has_value(); });
    if (n_env < opts.min_env_samples_per_hour || !all_present) {
      ++out.skips.env_incomplete;
      continue;
    }
    std::size_t positives = 0;
    for (auto it = lo; it != hi; ++it) positives += static_cast<std::size_t>(classify_env_sample(rule, it->get(rule.field)));
    Label label = 0;
    if (opts.agreement == Agreement::Purity) {
      if (positives != 0 && positives != n_env) {
        ++out.skips.impure;
        continue;
      }
      label = positives == n_env ? 1 : 0;
    } else {
      if (2 * positives == n_env) {
        ++out.skips.impure;
        continue;
      }
      label = 2 * positives > n_env ? 1 : 0;
    }

    const TimestampMs offset_in_series = h - series.start_ms;
    if (offset_in_series % kMsPerSecond != 0) {
      ++out.skips.signal_incomplete;
      continue;
    }
    const auto first = static_cast<std::size_t>(offset_in_series / kMsPerSecond);
    if (first + kWindowSeconds > series.values.size()) {
      ++out.skips.signal_incomplete;
      continue;
    }
    LabeledWindow w;
    w.plant_id = series.plant_id;
    w.channel = series.channel;
    w.start_ms = h;
    w.task = rule.task;
    w.label = label;
    w.values.assign(series.values.begin() + static_cast<std::ptrdiff_t>(first),
                    series.values.begin() + static_cast<std::ptrdiff_t>(first + kWindowSeconds));
    out.windows.push_back(std::move(w));
    ++out.skips.emitted;
  }
  return out;
}

WindowSet extract_windows(const std::vector<UniformSeries>& segments, const ingest::EnvSeries& env,
                          const LabelRule& rule, const WindowOptions& opts) {
  WindowSet out;
  for (const auto& seg : segments) {
    auto part = extract_windows(seg, env, rule, opts);
    std::move(part.windows.begin(), part.windows.end(), std::back_inserter(out.windows));
    out.skips += part.skips;
  }
  return out;
}

Task task_of_class(std::string_view name) {
  for (Task t : kAllTasks) {
    if (class_name(t, 0) == name || class_name(t, 1) == name) return t;
  }
  fail(ErrorCode::InvalidArgument, "unknown class '" + std::string(name) + "'");
}

void write_windows_csv(const std::filesystem::path& path, const std::vector<LabeledWindow>& windows) {
  std::string out = "plant_id,channel,start_ms,label";
  for (std::size_t i = 0; i < kWindowSeconds; ++i) out += ",v" + std::to_string(i);
  out += '\n';
  for (const auto& w : windows) {
    out += w.plant_id;
    out += ',';
    out += to_string(w.channel);
    out += ',';
    out += std::to_string(w.start_ms);
    out += ',';
    out += class_name(w.task, w.label);
    for (double v : w.values) {
      out += ',';
      out += csv::format_double(v);
    }
    out += '\n';
  }
  csv::write_file(path, out);
}

std::vector<LabeledWindow> read_windows_csv(const std::filesystem::path& path) {
  csv::require_file(path);
  csv::LineReader reader(path);
  std::string line;
  if (!reader.next(line)) fail(ErrorCode::EmptyFile, path.string());
  std::vector<LabeledWindow> out;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    const std::string where = path.string() + ":" + std::to_string(reader.line_number());
    if (f.size() != 4 + kWindowSeconds) fail(ErrorCode::MalformedRow, "wrong field count at " + where);
    LabeledWindow w;
    w.plant_id = std::string(f[0]);
    w.channel = parse_channel(f[1]);
    const auto ts = csv::parse_int(f[2]);
    if (!ts) fail(ErrorCode::MalformedRow, "bad start_ms at " + where);
    w.start_ms = *ts;
    w.task = task_of_class(f[3]);
    w.label = parse_class_name(w.task, f[3]);
    w.values.reserve(kWindowSeconds);
    for (std::size_t i = 0; i < kWindowSeconds; ++i) {
      const auto v = csv::parse_double(f[4 + i]);
      if (!v) fail(ErrorCode::MalformedRow, "bad value at " + where);
      w.values.push_back(*v);
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace phyto::labeling
