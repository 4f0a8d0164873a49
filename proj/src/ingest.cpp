#include "phyto/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "phyto/csv.hpp"
#include "phyto/error.hpp"

namespace phyto {

std::string_view to_string(Unit u) { return u == Unit::Millivolt ? "mV" : "zscore"; }

Unit parse_unit(std::string_view s) {
  if (s == "mV") return Unit::Millivolt;
  if (s == "zscore") return Unit::ZScore;
  fail(ErrorCode::InvalidArgument, "unknown unit '" + std::string(s) + "'");
}

std::size_t SparseSeries::present_count() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](const auto& v) { return v.has_value(); }));
}

}  // namespace phyto

namespace phyto::ingest {

namespace {

constexpr std::array<std::string_view, kEnvFieldCount> kEnvColumns = {
    "wind_speed", "wind_dir", "air_temp", "rel_humidity", "solar_irradiance", "precipitation", "dew_point"};

std::string at_line(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

/// Sorts rows by timestamp, rejecting any row displaced by more than one
/// position (an adjacent swap is tolerated), and collapses duplicates keeping
/// the first occurrence. Returns the number of dropped duplicates.
template <typename Row>
std::size_t order_rows(std::vector<Row>& rows, const std::vector<std::size_t>& line_numbers,
                       const std::filesystem::path& path) {
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rows[a].timestamp_ms < rows[b].timestamp_ms; });
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t orig = order[pos];
    const std::size_t displacement = orig > pos ? orig - pos : pos - orig;
    if (displacement > 1) {
      fail(ErrorCode::NonMonotoneTimestamp,
           "timestamp out of order at " + at_line(path, line_numbers[orig]));
    }
  }
  std::vector<Row> sorted;
  sorted.reserve(rows.size());
  std::size_t duplicates = 0;
  for (std::size_t idx : order) {
    if (!sorted.empty() && sorted.back().timestamp_ms == rows[idx].timestamp_ms) {
      ++duplicates;
      continue;
    }
    sorted.push_back(rows[idx]);
  }
  rows = std::move(sorted);
  return duplicates;
}

void check_header(const std::string& line, std::string_view expected, const std::filesystem::path& path) {
  if (line != expected) {
    fail(ErrorCode::MalformedRow,
         "unexpected header at " + at_line(path, 1) + ", expected '" + std::string(expected) + "'");
  }
}

}  // namespace

std::string_view column_name(EnvField f) { return kEnvColumns[static_cast<std::size_t>(f)]; }

EnvField parse_env_field(std::string_view column) {
  for (std::size_t i = 0; i < kEnvColumns.size(); ++i) {
    if (kEnvColumns[i] == column) return static_cast<EnvField>(i);
  }
  fail(ErrorCode::InvalidArgument, "unknown environment field '" + std::string(column) + "'");
}

RawTrace parse_trace_csv(const std::filesystem::path& path) {
  csv::require_file(path);
  csv::LineReader reader(path);
  std::string line;
  if (!reader.next(line)) fail(ErrorCode::EmptyFile, path.string());
  check_header(line, kTraceHeader, path);

  RawTrace trace;
  std::vector<std::size_t> lines;
  bool have_identity = false;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    const std::string where = at_line(path, reader.line_number());
    if (fields.size() != 4) fail(ErrorCode::MalformedRow, "expected 4 fields at " + where);
    const auto ts = csv::parse_int(fields[0]);
    const auto mv = csv::parse_double(fields[1]);
    if (!ts) fail(ErrorCode::MalformedRow, "bad timestamp at " + where);
    if (!mv || !std::isfinite(*mv)) fail(ErrorCode::MalformedRow, "bad potential at " + where);
    Channel channel;
    try {
      channel = parse_channel(fields[3]);
    } catch (const Error&) {
      fail(ErrorCode::MalformedRow, "bad channel at " + where);
    }
    if (!have_identity) {
      trace.plant_id = std::string(fields[2]);
      trace.channel = channel;
      have_identity = true;
    } else if (fields[2] != trace.plant_id || channel != trace.channel) {
      fail(ErrorCode::MalformedRow, "plant/channel changes within one trace at " + where);
    }
    trace.samples.push_back({*ts, *mv});
    lines.push_back(reader.line_number());
  }
  if (trace.samples.empty()) fail(ErrorCode::EmptyFile, "no samples in " + path.string());
  trace.duplicate_count = order_rows(trace.samples, lines, path);
  return trace;
}

EnvSeries parse_env_csv(const std::filesystem::path& path) {
  csv::require_file(path);
  csv::LineReader reader(path);
  std::string line;
  if (!reader.next(line)) fail(ErrorCode::EmptyFile, path.string());
  check_header(line, kEnvHeader, path);

  EnvSeries env;
  std::vector<std::size_t> lines;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    const std::string where = at_line(path, reader.line_number());
    if (fields.size() != kEnvFieldCount + 1) fail(ErrorCode::MalformedRow, "expected 8 fields at " + where);
    EnvSample s;
    const auto ts = csv::parse_int(fields[0]);
    if (!ts) fail(ErrorCode::MalformedRow, "bad timestamp at " + where);
    s.timestamp_ms = *ts;
    for (std::size_t f = 0; f < kEnvFieldCount; ++f) {
      const std::string_view cell = fields[f + 1];
      if (cell.empty()) continue;
      const auto v = csv::parse_double(cell);
      if (!v || !std::isfinite(*v)) {
        fail(ErrorCode::MalformedRow, "bad " + std::string(kEnvColumns[f]) + " at " + where);
      }
      s.fields[f] = *v;
    }
    if (auto& rh = s.get(EnvField::RelHumidity); rh && (*rh < 0.0 || *rh > 100.0)) {
      fail(ErrorCode::MalformedRow, "rel_humidity outside [0,100] at " + where);
    }
    if (auto& wd = s.get(EnvField::WindDirection); wd) {
      if (*wd == 360.0) *wd = 0.0;
      if (*wd < 0.0 || *wd >= 360.0) fail(ErrorCode::MalformedRow, "wind_dir outside [0,360) at " + where);
    }
    env.samples.push_back(s);
    lines.push_back(reader.line_number());
  }
  if (env.samples.empty()) fail(ErrorCode::EmptyFile, "no samples in " + path.string());
  env.duplicate_count = order_rows(env.samples, lines, path);
  return env;
}

std::string format_trace_csv(const RawTrace& trace) {
  std::string out(kTraceHeader);
  out += '\n';
  const std::string suffix = "," + trace.plant_id + "," + std::string(to_string(trace.channel)) + "\n";
  for (const auto& s : trace.samples) {
    out += std::to_string(s.timestamp_ms);
    out += ',';
    out += csv::format_double(s.potential_mv);
    out += suffix;
  }
  return out;
}

std::string format_env_csv(const EnvSeries& env) {
  std::string out(kEnvHeader);
  out += '\n';
  for (const auto& s : env.samples) {
    out += std::to_string(s.timestamp_ms);
    for (const auto& f : s.fields) {
      out += ',';
      if (f) out += csv::format_double(*f);
    }
    out += '\n';
  }
  return out;
}

std::size_t CoverageReport::retained_days() const {
  return static_cast<std::size_t>(std::count_if(days.begin(), days.end(), [](const auto& d) { return d.retained; }));
}

nlohmann::json CoverageReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& d : days) {
    arr.push_back({{"day", format_day(d.day)},
                   {"coverage", d.coverage},
                   {"retained", d.retained},
                   {"expected_samples", d.expected_samples},
                   {"present_samples", d.present_samples}});
  }
  return arr;
}

namespace {

TimestampMs offset_ms(const CoverageOptions& opts) {
  return static_cast<TimestampMs>(std::llround(opts.day_offset_hours * static_cast<double>(kMsPerHour)));
}

std::int64_t day_of(TimestampMs ts, TimestampMs offset) { return floor_div(ts + offset, kMsPerDay); }

CoverageReport build_report(std::int64_t first_day, std::int64_t last_day, const std::vector<std::size_t>& present,
                            const CoverageOptions& opts) {
  CoverageReport report;
  const auto expected = static_cast<std::size_t>(std::llround(86400.0 * opts.expected_rate_hz));
  for (std::int64_t d = first_day; d <= last_day; ++d) {
    CoverageDay cd;
    cd.day = d;
    cd.expected_samples = expected;
    cd.present_samples = present[static_cast<std::size_t>(d - first_day)];
    cd.coverage = std::min(1.0, static_cast<double>(cd.present_samples) / static_cast<double>(expected));
    cd.retained = cd.coverage >= kCoverageThreshold;
    report.days.push_back(cd);
  }
  return report;
}

void check_rate(const CoverageOptions& opts) {
  if (!(opts.expected_rate_hz > 0.0)) fail(ErrorCode::InvalidArgument, "expected_rate must be > 0");
}

}  // namespace

CoverageReport coverage_report(const std::vector<TimestampMs>& timestamps, const CoverageOptions& opts) {
  check_rate(opts);
  if (timestamps.empty()) return {};
  const TimestampMs off = offset_ms(opts);
  const auto [lo, hi] = std::minmax_element(timestamps.begin(), timestamps.end());
  const std::int64_t first = day_of(*lo, off);
  const std::int64_t last = day_of(*hi, off);
  std::vector<std::size_t> present(static_cast<std::size_t>(last - first + 1), 0);
  for (TimestampMs ts : timestamps) ++present[static_cast<std::size_t>(day_of(ts, off) - first)];
  return build_report(first, last, present, opts);
}

FilteredTrace coverage_filter(const RawTrace& trace, const CoverageOptions& opts) {
  std::vector<TimestampMs> ts;
  ts.reserve(trace.samples.size());
  for (const auto& s : trace.samples) ts.push_back(s.timestamp_ms);
  FilteredTrace out;
  out.report = coverage_report(ts, opts);
  out.trace.plant_id = trace.plant_id;
  out.trace.channel = trace.channel;
  out.trace.duplicate_count = trace.duplicate_count;
  if (out.report.days.empty()) return out;
  const TimestampMs off = offset_ms(opts);
  const std::int64_t first = out.report.days.front().day;
  for (const auto& s : trace.samples) {
    if (out.report.days[static_cast<std::size_t>(day_of(s.timestamp_ms, off) - first)].retained) {
      out.trace.samples.push_back(s);
    }
  }
  return out;
}

FilteredSeries coverage_filter(const SparseSeries& series, const CoverageOptions& opts) {
  check_rate(opts);
  FilteredSeries out;
  if (series.values.empty()) return out;
  const TimestampMs off = offset_ms(opts);
  const std::int64_t first = day_of(series.timestamp_at(0), off);
  const std::int64_t last = day_of(series.timestamp_at(series.values.size() - 1), off);
  std::vector<std::size_t> present(static_cast<std::size_t>(last - first + 1), 0);
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    if (series.values[i]) ++present[static_cast<std::size_t>(day_of(series.timestamp_at(i), off) - first)];
  }
  out.report = build_report(first, last, present, opts);

  SparseSeries* current = nullptr;
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    const TimestampMs ts = series.timestamp_at(i);
    const bool keep = out.report.days[static_cast<std::size_t>(day_of(ts, off) - first)].retained;
    if (!keep) {
      current = nullptr;
      continue;
    }
    if (current == nullptr) {
      SparseSeries seg;
      seg.plant_id = series.plant_id;
      seg.channel = series.channel;
      seg.start_ms = ts;
      seg.rate_hz = series.rate_hz;
      seg.unit = series.unit;
      out.segments.push_back(std::move(seg));
      current = &out.segments.back();
    }
    current->values.push_back(series.values[i]);
  }
  return out;
}

}  // namespace phyto::ingest
