#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "phyto/automl.hpp"
#include "phyto/error.hpp"
#include "phyto/eval.hpp"
#include "phyto/ingest.hpp"
#include "phyto/labeling.hpp"
#include "phyto/select.hpp"
#include "phyto/synth.hpp"

namespace phyto::experiment {

inline constexpr std::string_view kSoftwareVersion = "0.1.0";

/// Column layout of a foreign trace CSV. `timestamp_scale_ms` converts the
/// timestamp column to milliseconds (1000 for seconds).
struct TraceColumnMap {
  std::string timestamp = "timestamp_ms";
  double timestamp_scale_ms = 1.0;
  std::string potential = "potential_mv";
  double potential_scale_mv = 1.0;
  std::string plant_column;  ///< empty: use `plant_id`
  std::string plant_id = "plant";
  std::string channel_column;  ///< empty: use `channel`
  Channel channel = Channel::Stem;
  char delimiter = ',';
};

/// Column layout of a foreign weather CSV: environment field -> column name.
struct EnvColumnMap {
  std::string timestamp = "timestamp_ms";
  double timestamp_scale_ms = 1.0;
  std::vector<std::pair<ingest::EnvField, std::string>> fields;
  char delimiter = ',';
};

TraceColumnMap trace_map_from_json(const nlohmann::json& j);
EnvColumnMap env_map_from_json(const nlohmann::json& j);

/// Reads a trace CSV through a column map; one file may hold several plants or
/// channels, so the result is one trace per (plant, channel) in first-seen order.
std::vector<RawTrace> adapt_trace_csv(const std::filesystem::path& path, const TraceColumnMap& map);
ingest::EnvSeries adapt_env_csv(const std::filesystem::path& path, const EnvColumnMap& map);

struct SelectionConfig {
  std::size_t max_k = 50;
  learn::ClassifierKind classifier = learn::ClassifierKind::RandomForest;
  select::MiMode mode = select::MiMode::PerSplit;
  std::size_t bins = select::kDefaultBins;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;

  std::optional<synth::SynthConfig> synthetic;
  std::vector<std::filesystem::path> trace_paths;
  std::optional<std::filesystem::path> env_path;
  /// Set when the inputs need the column-mapped adapter (real-data mode).
  std::optional<TraceColumnMap> trace_map;
  std::optional<EnvColumnMap> env_map;

  std::vector<Task> tasks = {kAllTasks.begin(), kAllTasks.end()};
  std::vector<Channel> channels = {Channel::Stem, Channel::Leaf};

  /// Z-score the series before windowing. Profiles are always z-scored.
  bool zscore = false;
  double day_offset_hours = 0.0;
  labeling::WindowOptions windows;
  std::string catalog_version = "v1";
  bool smote = true;
  std::size_t smote_k = 5;

  std::vector<learn::ClassifierKind> classifiers = {learn::ClassifierKind::RandomForest};
  bool automl = false;
  std::size_t automl_budget = 1024;
  std::size_t automl_patience = 100;

  std::optional<SelectionConfig> selection;
  eval::SplitPlan split;
  bool profile = true;
  /// Also write the 1 Hz series and labelled windows.
  bool write_intermediates = false;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// FNV-1a 64 over bytes, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);
/// Hash of the canonical (key-sorted) JSON dump.
std::string config_hash(const nlohmann::json& config);

struct StageTiming {
  std::string stage;
  double duration_ms = 0.0;
};

struct RunManifest {
  std::string config_hash;
  std::string catalog_version;
  std::string software_version{kSoftwareVersion};
  std::vector<StageTiming> stages;
  /// Relative to the run directory, sorted.
  std::vector<std::string> artifacts;
  /// Hash over the metric outputs (reports, sweeps, PR curves, profiles).
  std::string outputs_hash;

  nlohmann::json to_json() const;
};

/// A stage failure, carrying the original error code.
class StageError : public Error {
 public:
  StageError(std::string stage, ErrorCode code, const std::string& message);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Exclusive writer lock on a run directory (`.lock` file).
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path path_;
};

RunManifest run_experiment(const ExperimentConfig& config);

/// Process exit code for an error: 2 for config and path problems, else 1.
int exit_code_for(const Error& e);

}  // namespace phyto::experiment
