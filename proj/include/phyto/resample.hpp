#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phyto/features.hpp"

namespace phyto::resample {

struct SmoteConfig {
  std::size_t k_neighbors = 5;
  std::uint64_t seed = 0;
};

/// Where a synthetic row came from: row = X[base] + u * (X[neighbor] - X[base]).
struct SyntheticOrigin {
  std::size_t base = 0;
  std::size_t neighbor = 0;
  double u = 0.0;
};

struct SmoteResult {
  Matrix X;
  std::vector<Label> y;
  /// One entry per synthetic row, in output order (after the originals).
  std::vector<SyntheticOrigin> origins;
  /// k actually used (reduced when the minority class is small).
  std::size_t k_used = 0;
  std::vector<std::string> warnings;
};

/// Upsamples the minority class to parity with the majority class. Original
/// rows come first and unchanged; synthetic rows follow, ordered by
/// (base index, draw index).
SmoteResult smote(const Matrix& X, const std::vector<Label>& y, const SmoteConfig& cfg);

features::FeatureMatrix smote(const features::FeatureMatrix& train, const SmoteConfig& cfg);

}  // namespace phyto::resample
