#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "phyto/labeling.hpp"
#include "phyto/types.hpp"

namespace phyto::features {

enum class FeatureKind {
  Mean,
  Variance,
  StdDev,
  Skewness,
  Kurtosis,
  Minimum,
  Maximum,
  Median,
  Quantile,  ///< param = q
  Range,
  RootMeanSquare,
  AbsEnergy,
  MeanAbsChange,
  MeanChange,
  MeanSecondDerivativeCentral,
  ZeroCrossings,
  CountAboveMean,
  CountBelowMean,
  LongestStrikeAboveMean,
  LongestStrikeBelowMean,
  NumberOfPeaks,    ///< param = support
  Autocorrelation,  ///< param = lag
  PartialSumHalfRatio,
  LinearTrendSlope,
  LinearTrendIntercept,
  LinearTrendR2,
  BinnedEntropy,  ///< param = bin count
  CidCeNormalized,
  CidCe,
  SpectralCentroid,
  SpectralVariance,
  BandPowerFraction,  ///< param = band index of 3 log-spaced bands
  FirstValue,
  LastValue,
  AbsoluteSumOfChanges,
  RatioBeyondSigma,  ///< param = r
  IndexOfMax,
  IndexOfMin,
};

struct FeatureDef {
  std::string name;
  FeatureKind kind = FeatureKind::Mean;
  double param = 0.0;
};

struct FeatureCatalog {
  std::string version;
  std::vector<FeatureDef> features;

  std::vector<std::string> names() const;
};

/// The curated statistical catalog (version "v1").
const FeatureCatalog& catalog_v1();
/// Looks up a catalog by version tag.
const FeatureCatalog& catalog(std::string_view version);

struct FeatureRow {
  std::vector<double> values;
  /// 1 where the feature was undefined on the input and imputed as 0.
  std::vector<std::uint8_t> imputed;
};

FeatureRow compute_features(std::span<const double> window, const FeatureCatalog& catalog);

struct Provenance {
  std::string plant_id;
  Channel channel = Channel::Stem;
  TimestampMs start_ms = 0;
};

struct FeatureMatrix {
  Task task = Task::DayNight;
  std::string catalog_version;
  std::vector<std::string> names;
  Matrix X;
  std::vector<Label> y;
  std::vector<Provenance> provenance;

  std::size_t rows() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(X.cols()); }

  FeatureMatrix select_rows(std::span<const std::size_t> idx) const;
  FeatureMatrix select_cols(std::span<const std::size_t> idx) const;
};

struct BuildResult {
  FeatureMatrix matrix;
  std::size_t imputed_cells = 0;
};

BuildResult build_matrix(const std::vector<labeling::LabeledWindow>& windows, const FeatureCatalog& catalog);

struct MinMaxParams {
  Vector min;
  Vector max;
};

MinMaxParams fit_minmax(const Matrix& train);
/// (x - min) / (max - min) per column, unclipped; columns with min == max map to 0.
Matrix apply_minmax(const MinMaxParams& params, const Matrix& rows);

void write_matrix_csv(const std::filesystem::path& path, const FeatureMatrix& m);
FeatureMatrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace phyto::features
