#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "phyto/types.hpp"

namespace phyto {

enum class Unit { Millivolt, ZScore };

std::string_view to_string(Unit u);
Unit parse_unit(std::string_view s);

struct TraceSample {
  TimestampMs timestamp_ms = 0;
  double potential_mv = 0.0;

  friend bool operator==(const TraceSample&, const TraceSample&) = default;
};

/// Raw electrode trace at the native (~200 Hz) rate.
struct RawTrace {
  std::string plant_id;
  Channel channel = Channel::Stem;
  std::vector<TraceSample> samples;
  /// Rows dropped because their timestamp repeated an earlier row.
  std::size_t duplicate_count = 0;
};

/// Regular grid with explicit empty slots for seconds that had no raw samples.
struct SparseSeries {
  std::string plant_id;
  Channel channel = Channel::Stem;
  TimestampMs start_ms = 0;
  double rate_hz = 1.0;
  Unit unit = Unit::Millivolt;
  std::vector<std::optional<double>> values;

  TimestampMs timestamp_at(std::size_t i) const {
    return start_ms + static_cast<TimestampMs>(std::llround(static_cast<double>(i) * 1000.0 / rate_hz));
  }
  std::size_t present_count() const;
};

/// Gap-free regular grid.
struct UniformSeries {
  std::string plant_id;
  Channel channel = Channel::Stem;
  TimestampMs start_ms = 0;
  double rate_hz = 1.0;
  Unit unit = Unit::Millivolt;
  std::vector<double> values;

  TimestampMs timestamp_at(std::size_t i) const {
    return start_ms + static_cast<TimestampMs>(std::llround(static_cast<double>(i) * 1000.0 / rate_hz));
  }
  TimestampMs end_ms() const { return timestamp_at(values.size()); }
};

}  // namespace phyto
