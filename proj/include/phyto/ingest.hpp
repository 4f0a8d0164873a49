#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "phyto/series.hpp"

namespace phyto::ingest {

enum class EnvField {
  WindSpeed,
  WindDirection,
  AirTemp,
  RelHumidity,
  SolarIrradiance,
  Precipitation,
  DewPoint,
};
inline constexpr std::size_t kEnvFieldCount = 7;

/// Column name of the field in the environment CSV header.
std::string_view column_name(EnvField f);
EnvField parse_env_field(std::string_view column);

struct EnvSample {
  TimestampMs timestamp_ms = 0;
  std::array<std::optional<double>, kEnvFieldCount> fields{};

  const std::optional<double>& get(EnvField f) const { return fields[static_cast<std::size_t>(f)]; }
  std::optional<double>& get(EnvField f) { return fields[static_cast<std::size_t>(f)]; }
};

/// Weather station records at 0.1 Hz. A missing cell is an empty optional.
struct EnvSeries {
  std::vector<EnvSample> samples;
  std::size_t duplicate_count = 0;
};

inline constexpr std::string_view kTraceHeader = "timestamp_ms,potential_mv,plant_id,channel";
inline constexpr std::string_view kEnvHeader =
    "timestamp_ms,wind_speed,wind_dir,air_temp,rel_humidity,solar_irradiance,precipitation,dew_point";

RawTrace parse_trace_csv(const std::filesystem::path& path);
EnvSeries parse_env_csv(const std::filesystem::path& path);

std::string format_trace_csv(const RawTrace& trace);
std::string format_env_csv(const EnvSeries& env);

struct CoverageDay {
  std::int64_t day = 0;  ///< days since epoch, after the configured offset
  std::size_t expected_samples = 0;
  std::size_t present_samples = 0;
  double coverage = 0.0;
  bool retained = false;
};

struct CoverageReport {
  std::vector<CoverageDay> days;

  std::size_t retained_days() const;
  nlohmann::json to_json() const;
};

inline constexpr double kCoverageThreshold = 0.8;

struct CoverageOptions {
  double expected_rate_hz = 1.0;
  /// Shift applied before cutting days; 0 means days end at UTC midnight.
  double day_offset_hours = 0.0;
};

/// Counts samples per calendar day from a sorted timestamp list.
CoverageReport coverage_report(const std::vector<TimestampMs>& timestamps, const CoverageOptions& opts);

struct FilteredTrace {
  RawTrace trace;
  CoverageReport report;
};
FilteredTrace coverage_filter(const RawTrace& trace, const CoverageOptions& opts);

struct FilteredSeries {
  /// Contiguous runs of retained days, each cut at day boundaries.
  std::vector<SparseSeries> segments;
  CoverageReport report;
};
FilteredSeries coverage_filter(const SparseSeries& series, const CoverageOptions& opts);

}  // namespace phyto::ingest
