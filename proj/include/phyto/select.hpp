#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "phyto/eval.hpp"
#include "phyto/features.hpp"

namespace phyto::select {

struct FeatureScore {
  std::size_t column = 0;
  std::string name;
  double mi = 0.0;  ///< nats
  std::size_t rank = 0;  ///< 1-based
};

inline constexpr std::size_t kDefaultBins = 16;

/// Equal-frequency bin of every row of `column`. Tied values share the bin of
/// their first sorted position: bin = floor(first_rank * bins / n).
std::vector<std::size_t> equal_frequency_bins(std::span<const double> column, std::size_t bins);

/// Plug-in mutual information between two discrete codings, in nats.
double plugin_mi(std::span<const std::size_t> a, std::span<const Label> y);

/// MI of each column with the labels, sorted descending; ties keep column order.
std::vector<FeatureScore> mutual_information(const Matrix& X, const std::vector<Label>& y,
                                             const std::vector<std::string>& names = {},
                                             std::size_t bins = kDefaultBins);

/// Column indices of the top `k` scores, in ascending column order.
std::vector<std::size_t> top_k_columns(const std::vector<FeatureScore>& ranking, std::size_t k);

enum class MiMode {
  PerSplit,  ///< MI refit on each shuffle split's training rows
  Global,    ///< MI fit once on the whole training pool
};

struct SweepOptions {
  std::size_t max_k = 50;
  std::size_t bins = kDefaultBins;
  MiMode mode = MiMode::PerSplit;
  eval::ProtocolOptions protocol;
};

struct SweepEntry {
  std::size_t k = 0;
  std::vector<std::string> selected;  ///< top-k of the pool ranking
  std::string feature_added;
  double mean_macro_f1 = 0.0;
  double std_macro_f1 = 0.0;
  double val_mean_macro_f1 = 0.0;
  double val_std_macro_f1 = 0.0;
};

struct SelectionSweep {
  std::vector<FeatureScore> ranking;  ///< MI over the training pool
  std::vector<SweepEntry> entries;
  MiMode mode = MiMode::PerSplit;
};

SelectionSweep sweep_top_k(const features::FeatureMatrix& data, const learn::PipelineSpec& spec,
                           const SweepOptions& opts);

void write_sweep_csv(const std::filesystem::path& path, const SelectionSweep& sweep);
void write_ranking_csv(const std::filesystem::path& path, const std::vector<FeatureScore>& ranking);

}  // namespace phyto::select
