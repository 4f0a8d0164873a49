#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "phyto/ingest.hpp"
#include "phyto/rng.hpp"
#include "phyto/series.hpp"

namespace phyto::synth {

/// Scales of the planted signatures; 0 disables one.
struct SignalStrengths {
  double day = 1.0;    ///< offset and extra variance while irradiance is up
  double rain = 1.0;   ///< decaying spikes during rain
  double warm = 1.0;   ///< slow positive drift above 24 C
  double wind = 1.0;   ///< 5-20 s oscillation while windy

  static SignalStrengths none() { return {0.0, 0.0, 0.0, 0.0}; }
};

/// Majority-class shares of the labelled hours. Warm/cold and windy/calm are
/// shares of the 08-20 local hours.
struct ClassTargets {
  double night = 0.610;
  double dry = 0.959;
  double cold = 0.794;
  double calm = 0.936;
};

struct SynthConfig {
  std::size_t plants = 2;
  std::size_t days = 7;
  TimestampMs start_ms = 1654041600000;  ///< 2022-06-01T00:00Z
  double raw_rate_hz = 200.0;
  double env_rate_hz = 0.1;
  std::vector<Channel> channels = {Channel::Stem, Channel::Leaf};
  SignalStrengths strengths;
  ClassTargets targets;
  double local_offset_hours = 1.0;  ///< whole hours
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

struct HourState {
  bool day = false;
  bool rain = false;
  bool warm = false;
  bool windy = false;
  double rain_rate = 0.0;   ///< mm per sample
  double wind_period_s = 10.0;
};

/// Hourly weather plan plus the continuous environment curves derived from it.
/// Every hour sits strictly on one side of each labelling threshold.
class Weather {
 public:
  explicit Weather(const SynthConfig& cfg);

  TimestampMs start_ms() const { return start_ms_; }
  std::size_t hours() const { return hours_.size(); }
  const HourState& hour(std::size_t h) const { return hours_.at(h); }
  std::size_t hour_of(TimestampMs t) const;

  double irradiance(TimestampMs t) const;
  double air_temp(TimestampMs t) const;
  double wind_speed(TimestampMs t) const;
  double precipitation(TimestampMs t) const;
  double rel_humidity(TimestampMs t) const;

  /// Samples every curve at the configured environment rate.
  ingest::EnvSeries env_series(double rate_hz, std::uint64_t seed) const;

 private:
  struct Block {
    std::size_t start = 0;  ///< hour of day, UTC
    std::size_t length = 0;
  };
  TimestampMs start_ms_ = 0;
  int local_offset_ = 1;
  std::vector<HourState> hours_;
  std::vector<Block> day_blocks_;
  std::vector<Block> warm_blocks_;
};

std::string plant_id(std::size_t index);

/// Streams one plant/channel trace an hour at a time at the raw rate.
class TraceGenerator {
 public:
  TraceGenerator(const SynthConfig& cfg, const Weather& weather, std::size_t plant, Channel channel);

  bool done() const { return hour_ >= weather_->hours(); }
  RawTrace next_hour();

 private:
  double second_value(TimestampMs t, const HourState& hs);

  const SynthConfig* cfg_;
  const Weather* weather_;
  std::string plant_id_;
  Channel channel_;
  Rng rng_;
  std::size_t hour_ = 0;
  double baseline_ = 0.0;
  double gain_ = 1.0;
  std::array<double, 3> ar_{};
  double spike_ = 0.0;
  double wind_phase_ = 0.0;
};

/// Generates at the raw rate and mean-filters each hour to `target_rate_hz`.
SparseSeries generate_downsampled(const SynthConfig& cfg, const Weather& weather, std::size_t plant,
                                  Channel channel, double target_rate_hz = 1.0);

struct SynthFiles {
  std::filesystem::path env;
  std::vector<std::filesystem::path> traces;
};

/// Writes `env.csv` and one `<plant>_<channel>.csv` raw trace per plant and channel.
SynthFiles write_synthetic(const SynthConfig& cfg, const std::filesystem::path& dir);

}  // namespace phyto::synth
