#include "phyto/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "phyto/csv.hpp"
#include "phyto/error.hpp"
#include "phyto/preprocess.hpp"

namespace phyto::synth {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint64_t kWeatherStream = 0x3ea7;
constexpr std::uint64_t kEnvStream = 0xe4f;

// Slow noise floor: AR(1) processes at 1 Hz, summed for a 1/f-like spectrum.
constexpr std::array<double, 3> kArTau = {3.0, 30.0, 300.0};
constexpr std::array<double, 3> kArStd = {0.6, 0.5, 0.5};
constexpr double kWhiteStd = 2.0;

std::size_t share(std::size_t day, double per_day) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(day + 1) * per_day) -
                                  std::llround(static_cast<double>(day) * per_day));
}

std::size_t draw_start(Rng& rng, std::size_t lo, std::size_t hi, std::size_t len) {
  return lo + static_cast<std::size_t>(uniform_index(rng, hi - lo - len + 1));
}

}  // namespace

nlohmann::json SynthConfig::to_json() const {
  nlohmann::json ch = nlohmann::json::array();
  for (auto c : channels) ch.push_back(phyto::to_string(c));
  return {{"plants", plants},
          {"days", days},
          {"start_ms", start_ms},
          {"raw_rate_hz", raw_rate_hz},
          {"env_rate_hz", env_rate_hz},
          {"channels", ch},
          {"strengths", {{"day", strengths.day}, {"rain", strengths.rain}, {"warm", strengths.warm}, {"wind", strengths.wind}}},
          {"targets", {{"night", targets.night}, {"dry", targets.dry}, {"cold", targets.cold}, {"calm", targets.calm}}},
          {"local_offset_hours", local_offset_hours},
          {"seed", seed}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig c;
  try {
    c.plants = j.value("plants", c.plants);
    c.days = j.value("days", c.days);
    c.start_ms = j.value("start_ms", c.start_ms);
    c.raw_rate_hz = j.value("raw_rate_hz", c.raw_rate_hz);
    c.env_rate_hz = j.value("env_rate_hz", c.env_rate_hz);
    if (j.contains("channels")) {
      c.channels.clear();
      for (const auto& s : j.at("channels")) c.channels.push_back(parse_channel(s.get<std::string>()));
    }
    if (j.contains("strengths")) {
      const auto& s = j.at("strengths");
      if (s.is_number()) {
        const double v = s.get<double>();
        c.strengths = {v, v, v, v};
      } else {
        c.strengths.day = s.value("day", c.strengths.day);
        c.strengths.rain = s.value("rain", c.strengths.rain);
        c.strengths.warm = s.value("warm", c.strengths.warm);
        c.strengths.wind = s.value("wind", c.strengths.wind);
      }
    }
    if (j.contains("targets")) {
      const auto& t = j.at("targets");
      c.targets.night = t.value("night", c.targets.night);
      c.targets.dry = t.value("dry", c.targets.dry);
      c.targets.cold = t.value("cold", c.targets.cold);
      c.targets.calm = t.value("calm", c.targets.calm);
    }
    c.local_offset_hours = j.value("local_offset_hours", c.local_offset_hours);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("synthetic config: ") + e.what());
  }
  if (c.plants == 0 || c.days == 0) fail(ErrorCode::ConfigError, "synthetic config needs plants >= 1 and days >= 1");
  if (!(c.raw_rate_hz >= 1.0) || !(c.env_rate_hz > 0.0)) fail(ErrorCode::ConfigError, "synthetic rates must be positive");
  if (c.start_ms % kMsPerHour != 0) fail(ErrorCode::ConfigError, "synthetic start must be hour aligned");
  if (c.local_offset_hours != std::round(c.local_offset_hours)) {
    fail(ErrorCode::ConfigError, "synthetic local offset must be whole hours");
  }
  return c;
}

Weather::Weather(const SynthConfig& cfg)
    : start_ms_(cfg.start_ms), local_offset_(static_cast<int>(std::lround(cfg.local_offset_hours))) {
  Rng rng = make_rng(cfg.seed, kWeatherStream);
  hours_.resize(cfg.days * 24);
  // The 08-20 local window, in hours of the UTC day.
  const int lo = 8 - local_offset_;
  const int hi = 20 - local_offset_;
  if (lo < 0 || hi > 24) fail(ErrorCode::ConfigError, "local offset pushes the 08-20 window across midnight");
  const auto rlo = static_cast<std::size_t>(lo);
  const auto rhi = static_cast<std::size_t>(hi);
  const double span = static_cast<double>(rhi - rlo);

  for (std::size_t d = 0; d < cfg.days; ++d) {
    HourState* day = &hours_[d * 24];
    const std::size_t n_day = std::min<std::size_t>(share(d, 24.0 * (1.0 - cfg.targets.night)), 24);
    const auto noon = static_cast<std::size_t>(std::clamp(12 - local_offset_, 0, 23));
    const std::size_t day_start = std::clamp<std::size_t>(noon >= n_day / 2 ? noon - n_day / 2 : 0, 0, 24 - n_day);
    day_blocks_.push_back({day_start, n_day});
    for (std::size_t h = day_start; h < day_start + n_day; ++h) day[h].day = true;

    const std::size_t n_rain = std::min<std::size_t>(share(d, 24.0 * (1.0 - cfg.targets.dry)), 24);
    const std::size_t rain_start = draw_start(rng, 0, 24, n_rain);
    for (std::size_t h = rain_start; h < rain_start + n_rain; ++h) {
      day[h].rain = true;
      day[h].rain_rate = 0.05 + 0.3 * uniform01(rng);
    }

    const auto n_warm = std::min<std::size_t>(share(d, span * (1.0 - cfg.targets.cold)), rhi - rlo);
    const std::size_t warm_start = draw_start(rng, rlo, rhi, n_warm);
    warm_blocks_.push_back({warm_start, n_warm});
    for (std::size_t h = warm_start; h < warm_start + n_warm; ++h) day[h].warm = true;

    const auto n_wind = std::min<std::size_t>(share(d, span * (1.0 - cfg.targets.calm)), rhi - rlo);
    const std::size_t wind_start = draw_start(rng, rlo, rhi, n_wind);
    for (std::size_t h = 0; h < 24; ++h) day[h].wind_period_s = 5.0 + 15.0 * uniform01(rng);
    for (std::size_t h = wind_start; h < wind_start + n_wind; ++h) day[h].windy = true;
  }
}

std::size_t Weather::hour_of(TimestampMs t) const {
  const auto h = floor_div(t - start_ms_, kMsPerHour);
  return static_cast<std::size_t>(std::clamp<std::int64_t>(h, 0, static_cast<std::int64_t>(hours_.size()) - 1));
}

double Weather::irradiance(TimestampMs t) const {
  const std::size_t h = hour_of(t);
  if (!hours_[h].day) return 0.0;
  const Block& b = day_blocks_[h / 24];
  const double since = static_cast<double>(t - start_ms_) / kMsPerHour - static_cast<double>((h / 24) * 24 + b.start);
  return 60.0 + 740.0 * std::sin(kPi * std::clamp(since / static_cast<double>(b.length), 0.0, 1.0));
}

double Weather::air_temp(TimestampMs t) const {
  const std::size_t h = hour_of(t);
  const double hours_since = static_cast<double>(t - start_ms_) / kMsPerHour;
  if (hours_[h].warm) {
    const Block& b = warm_blocks_[h / 24];
    const double since = hours_since - static_cast<double>((h / 24) * 24 + b.start);
    return 25.5 + 3.0 * std::sin(kPi * std::clamp(since / static_cast<double>(b.length), 0.0, 1.0));
  }
  const double local = hours_since + local_offset_;
  return 14.0 + 6.0 * std::sin(2.0 * kPi * (local - 9.0) / 24.0);
}

double Weather::wind_speed(TimestampMs t) const {
  const double minutes = static_cast<double>(t - start_ms_) / 60000.0;
  const double wave = std::sin(2.0 * kPi * minutes / 37.0);
  return hours_[hour_of(t)].windy ? 2.5 + 1.0 * wave : 0.6 + 0.4 * wave;
}

double Weather::precipitation(TimestampMs t) const {
  const HourState& hs = hours_[hour_of(t)];
  return hs.rain ? hs.rain_rate : 0.0;
}

double Weather::rel_humidity(TimestampMs t) const {
  return std::clamp(85.0 - 2.0 * (air_temp(t) - 14.0) + (precipitation(t) > 0.0 ? 10.0 : 0.0), 5.0, 100.0);
}

ingest::EnvSeries Weather::env_series(double rate_hz, std::uint64_t seed) const {
  using ingest::EnvField;
  Rng rng = make_rng(seed, kEnvStream);
  const auto step = static_cast<TimestampMs>(std::llround(1000.0 / rate_hz));
  const TimestampMs end = start_ms_ + static_cast<TimestampMs>(hours_.size()) * kMsPerHour;
  ingest::EnvSeries env;
  double dir = 200.0;
  for (TimestampMs t = start_ms_; t < end; t += step) {
    ingest::EnvSample s;
    s.timestamp_ms = t;
    const double temp = air_temp(t);
    const double rh = rel_humidity(t);
    dir = std::fmod(dir + 10.0 * standard_normal(rng) + 360.0, 360.0);
    s.get(EnvField::WindSpeed) = wind_speed(t);
    s.get(EnvField::WindDirection) = dir;
    s.get(EnvField::AirTemp) = temp;
    s.get(EnvField::RelHumidity) = rh;
    s.get(EnvField::SolarIrradiance) = irradiance(t);
    s.get(EnvField::Precipitation) = precipitation(t);
    s.get(EnvField::DewPoint) = temp - (100.0 - rh) / 5.0;
    env.samples.push_back(s);
  }
  return env;
}

std::string plant_id(std::size_t index) {
  std::string n = std::to_string(index + 1);
  return "plant" + std::string(n.size() < 2 ? 2 - n.size() : 0, '0') + n;
}

TraceGenerator::TraceGenerator(const SynthConfig& cfg, const Weather& weather, std::size_t plant, Channel channel)
    : cfg_(&cfg),
      weather_(&weather),
      plant_id_(plant_id(plant)),
      channel_(channel),
      rng_(make_rng(cfg.seed, 0x7000 + 2 * plant + (channel == Channel::Leaf ? 1 : 0))) {
  baseline_ = -40.0 + 30.0 * uniform01(rng_);
  gain_ = channel == Channel::Stem ? 1.0 : 0.8;
  for (std::size_t i = 0; i < ar_.size(); ++i) ar_[i] = kArStd[i] * standard_normal(rng_);
}

double TraceGenerator::second_value(TimestampMs t, const HourState& hs) {
  const auto& s = cfg_->strengths;
  double v = baseline_;
  for (std::size_t i = 0; i < ar_.size(); ++i) {
    const double phi = std::exp(-1.0 / kArTau[i]);
    ar_[i] = phi * ar_[i] + kArStd[i] * std::sqrt(1.0 - phi * phi) * standard_normal(rng_);
  }
  const double irr = weather_->irradiance(t) / 800.0;
  // Day: the fast noise component grows and the level rises with irradiance.
  const double day_gain = 1.0 + (hs.day ? s.day * irr : 0.0);
  v += ar_[0] * day_gain + ar_[1] + ar_[2];
  if (hs.day) v += s.day * (1.5 + 1.5 * irr);

  spike_ *= std::exp(-1.0 / 15.0);
  if (hs.rain && uniform01(rng_) < 1.0 / 60.0) spike_ += s.rain * (3.0 + 3.0 * uniform01(rng_));
  v += spike_;

  v += s.warm * std::max(0.0, weather_->air_temp(t) - 24.0);
  return gain_ * v;
}

RawTrace TraceGenerator::next_hour() {
  if (done()) fail(ErrorCode::InvalidArgument, "trace generator exhausted");
  const HourState& hs = weather_->hour(hour_);
  const TimestampMs h0 = weather_->start_ms() + static_cast<TimestampMs>(hour_) * kMsPerHour;
  const double rate = cfg_->raw_rate_hz;
  const auto per_second = static_cast<std::size_t>(std::llround(rate));
  const double white = kWhiteStd * (hs.day ? 1.0 + cfg_->strengths.day * weather_->irradiance(h0) / 800.0 : 1.0);

  RawTrace out;
  out.plant_id = plant_id_;
  out.channel = channel_;
  out.samples.reserve(per_second * 3600);
  for (std::size_t sec = 0; sec < 3600; ++sec) {
    const TimestampMs ts = h0 + static_cast<TimestampMs>(sec) * kMsPerSecond;
    const double level = second_value(ts, hs);
    for (std::size_t i = 0; i < per_second; ++i) {
      const double offset_s = static_cast<double>(i) / rate;
      double v = level + gain_ * white * standard_normal(rng_);
      wind_phase_ += 2.0 * kPi / (rate * hs.wind_period_s);
      if (hs.windy) v += gain_ * cfg_->strengths.wind * 1.5 * std::sin(wind_phase_);
      out.samples.push_back({ts + static_cast<TimestampMs>(std::llround(offset_s * 1000.0)), v});
    }
  }
  wind_phase_ = std::fmod(wind_phase_, 2.0 * kPi);
  ++hour_;
  return out;
}

SparseSeries generate_downsampled(const SynthConfig& cfg, const Weather& weather, std::size_t plant,
                                  Channel channel, double target_rate_hz) {
  TraceGenerator gen(cfg, weather, plant, channel);
  SparseSeries out;
  bool first = true;
  while (!gen.done()) {
    const SparseSeries part = preprocess::downsample_mean(gen.next_hour(), target_rate_hz);
    if (first) {
      out = part;
      first = false;
    } else {
      out.values.insert(out.values.end(), part.values.begin(), part.values.end());
    }
  }
  return out;
}

SynthFiles write_synthetic(const SynthConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const Weather weather(cfg);
  SynthFiles files;
  files.env = dir / "env.csv";
  csv::write_file(files.env, ingest::format_env_csv(weather.env_series(cfg.env_rate_hz, cfg.seed)));
  for (std::size_t p = 0; p < cfg.plants; ++p) {
    for (Channel c : cfg.channels) {
      const auto path = dir / (plant_id(p) + "_" + std::string(to_string(c)) + ".csv");
      std::ofstream out(path, std::ios::binary);
      if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
      out << ingest::kTraceHeader << '\n';
      const std::string suffix = "," + plant_id(p) + "," + std::string(to_string(c)) + "\n";
      TraceGenerator gen(cfg, weather, p, c);
      std::string buf;
      while (!gen.done()) {
        buf.clear();
        for (const auto& s : gen.next_hour().samples) {
          buf += std::to_string(s.timestamp_ms);
          buf += ',';
          buf += csv::format_double(s.potential_mv);
          buf += suffix;
        }
        out << buf;
      }
      if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
      files.traces.push_back(path);
    }
  }
  csv::write_file(dir / "synth.json", cfg.to_json().dump(2) + "\n");
  return files;
}

}  // namespace phyto::synth
