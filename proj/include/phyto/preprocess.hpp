#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "phyto/ingest.hpp"
#include "phyto/series.hpp"

namespace phyto::preprocess {

struct ZScoreParams {
  double mu = 0.0;
  double sigma = 1.0;
};

/// Mean of all raw samples in each [t, t + 1/rate) bin aligned to wall-clock
/// time. Bins without samples stay empty.
SparseSeries downsample_mean(const RawTrace& trace, double target_rate_hz = 1.0);

/// Fills empty slots by linear interpolation in time between the nearest
/// present neighbours; leading and trailing gaps take the nearest present value.
UniformSeries interpolate_time(const SparseSeries& series);

struct ZScoreResult {
  UniformSeries series;
  ZScoreParams params;
};

/// z = (x - mu) / sigma with the population standard deviation.
ZScoreResult zscore(const UniformSeries& series);
UniformSeries denormalize(const UniformSeries& series, const ZScoreParams& params);

struct PreprocessOptions {
  double target_rate_hz = 1.0;
  ingest::CoverageOptions coverage{};
  bool zscore = false;
};

struct PreprocessResult {
  std::vector<UniformSeries> segments;
  ingest::CoverageReport coverage;
  std::optional<ZScoreParams> zscore_params;
};

/// downsample -> coverage filter -> interpolate -> optional z-score. With
/// z-scoring on, one (mu, sigma) pair is fitted over all retained segments.
PreprocessResult run(const RawTrace& trace, const PreprocessOptions& opts);

/// Same chain, starting from an already downsampled series.
PreprocessResult run(const SparseSeries& downsampled, const PreprocessOptions& opts);

/// `timestamp_ms,value` CSV plus `<path>.json` sidecar (plant, channel, rate,
/// unit, z-score parameters when present).
void write_series(const std::filesystem::path& csv_path, const std::vector<UniformSeries>& segments,
                  const std::optional<ZScoreParams>& params);

struct LoadedSeries {
  std::vector<UniformSeries> segments;
  std::optional<ZScoreParams> zscore_params;
};
/// Reads a series written by write_series; a timestamp jump larger than one
/// period starts a new segment.
LoadedSeries read_series(const std::filesystem::path& csv_path);

}  // namespace phyto::preprocess
