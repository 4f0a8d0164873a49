#include "phyto/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "phyto/csv.hpp"
#include "phyto/features.hpp"
#include "phyto/preprocess.hpp"

namespace phyto::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Column-mapped adapter

namespace {

std::vector<std::string_view> split_on(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(delim, pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"')) s.remove_suffix(1);
  return s;
}

std::map<std::string, std::size_t, std::less<>> header_index(const std::vector<std::string_view>& header) {
  std::map<std::string, std::size_t, std::less<>> idx;
  for (std::size_t i = 0; i < header.size(); ++i) idx.emplace(std::string(trim(header[i])), i);
  return idx;
}

std::size_t column(const std::map<std::string, std::size_t, std::less<>>& idx, const std::string& name,
                   const fs::path& path) {
  const auto it = idx.find(name);
  if (it == idx.end()) fail(ErrorCode::MalformedRow, path.string() + ": missing column '" + name + "'");
  return it->second;
}

char delimiter_from_json(const json& j) {
  const std::string d = j.value("delimiter", std::string(","));
  if (d.size() != 1) fail(ErrorCode::ConfigError, "delimiter must be a single character");
  return d[0];
}

template <class Row>
void sort_dedup(std::vector<Row>& rows, std::size_t& duplicates, auto key) {
  std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) { return key(a) < key(b); });
  std::vector<Row> out;
  out.reserve(rows.size());
  for (auto& r : rows) {
    if (!out.empty() && key(out.back()) == key(r)) {
      ++duplicates;
      continue;
    }
    out.push_back(std::move(r));
  }
  rows = std::move(out);
}

}  // namespace

TraceColumnMap trace_map_from_json(const json& j) {
  TraceColumnMap m;
  try {
    m.timestamp = j.value("timestamp", m.timestamp);
    m.timestamp_scale_ms = j.value("timestamp_scale_ms", m.timestamp_scale_ms);
    m.potential = j.value("potential", m.potential);
    m.potential_scale_mv = j.value("potential_scale_mv", m.potential_scale_mv);
    m.plant_column = j.value("plant_column", m.plant_column);
    m.plant_id = j.value("plant_id", m.plant_id);
    m.channel_column = j.value("channel_column", m.channel_column);
    if (j.contains("channel")) m.channel = parse_channel(j.at("channel").get<std::string>());
    m.delimiter = delimiter_from_json(j);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("trace column map: ") + e.what());
  }
  return m;
}

EnvColumnMap env_map_from_json(const json& j) {
  EnvColumnMap m;
  try {
    m.timestamp = j.value("timestamp", m.timestamp);
    m.timestamp_scale_ms = j.value("timestamp_scale_ms", m.timestamp_scale_ms);
    m.delimiter = delimiter_from_json(j);
    if (j.contains("fields")) {
      for (const auto& [field, col] : j.at("fields").items()) {
        m.fields.emplace_back(ingest::parse_env_field(field), col.get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("env column map: ") + e.what());
  }
  return m;
}

std::vector<RawTrace> adapt_trace_csv(const fs::path& path, const TraceColumnMap& map) {
  csv::require_file(path);
  csv::LineReader reader(path);
  std::string line;
  if (!reader.next(line)) fail(ErrorCode::EmptyFile, path.string() + " is empty");
  const auto idx = header_index(split_on(line, map.delimiter));
  const std::size_t ts_col = column(idx, map.timestamp, path);
  const std::size_t v_col = column(idx, map.potential, path);
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  const std::size_t plant_col = map.plant_column.empty() ? kNone : column(idx, map.plant_column, path);
  const std::size_t channel_col = map.channel_column.empty() ? kNone : column(idx, map.channel_column, path);

  std::vector<RawTrace> traces;
  std::map<std::pair<std::string, Channel>, std::size_t> slot;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto f = split_on(line, map.delimiter);
    auto field = [&](std::size_t c) {
      if (c >= f.size()) fail(ErrorCode::MalformedRow, path.string() + ":" + std::to_string(reader.line_number()) + ": too few fields");
      return trim(f[c]);
    };
    const auto ts = csv::parse_double(field(ts_col));
    if (!ts) fail(ErrorCode::MalformedRow, path.string() + ":" + std::to_string(reader.line_number()) + ": bad timestamp");
    const auto v = csv::parse_double(field(v_col));
    if (!v) continue;  // missing potential
    const std::string plant = plant_col != kNone ? std::string(field(plant_col)) : map.plant_id;
    const Channel channel = channel_col != kNone ? parse_channel(field(channel_col)) : map.channel;
    auto [it, inserted] = slot.try_emplace({plant, channel}, traces.size());
    if (inserted) traces.push_back(RawTrace{plant, channel, {}, 0});
    traces[it->second].samples.push_back(
        {static_cast<TimestampMs>(std::llround(*ts * map.timestamp_scale_ms)), *v * map.potential_scale_mv});
  }
  if (traces.empty()) fail(ErrorCode::EmptyFile, path.string() + " has no samples");
  for (auto& t : traces) {
    sort_dedup(t.samples, t.duplicate_count, [](const TraceSample& s) { return s.timestamp_ms; });
  }
  return traces;
}

ingest::EnvSeries adapt_env_csv(const fs::path& path, const EnvColumnMap& map) {
  csv::require_file(path);
  csv::LineReader reader(path);
  std::string line;
  if (!reader.next(line)) fail(ErrorCode::EmptyFile, path.string() + " is empty");
  const auto idx = header_index(split_on(line, map.delimiter));
  const std::size_t ts_col = column(idx, map.timestamp, path);
  std::vector<std::pair<ingest::EnvField, std::size_t>> cols;
  for (const auto& [field, name] : map.fields) cols.emplace_back(field, column(idx, name, path));

  ingest::EnvSeries env;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto f = split_on(line, map.delimiter);
    const auto ts = ts_col < f.size() ? csv::parse_double(trim(f[ts_col])) : std::nullopt;
    if (!ts) fail(ErrorCode::MalformedRow, path.string() + ":" + std::to_string(reader.line_number()) + ": bad timestamp");
    ingest::EnvSample s;
    s.timestamp_ms = static_cast<TimestampMs>(std::llround(*ts * map.timestamp_scale_ms));
    for (const auto& [field, c] : cols) {
      if (c < f.size()) s.get(field) = csv::parse_double(trim(f[c]));
    }
    env.samples.push_back(s);
  }
  if (env.samples.empty()) fail(ErrorCode::EmptyFile, path.string() + " has no samples");
  sort_dedup(env.samples, env.duplicate_count, [](const ingest::EnvSample& s) { return s.timestamp_ms; });
  return env;
}

// ---------------------------------------------------------------------------
// Config

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  if (!j.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
  if (!j.contains("seed")) fail(ErrorCode::ConfigError, "config needs an explicit 'seed'");
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();

    const json& input = j.at("input");
    if (input.contains("synthetic")) {
      json s = input.at("synthetic");
      if (!s.contains("seed")) s["seed"] = c.seed;
      c.synthetic = synth::SynthConfig::from_json(s);
    } else {
      for (const auto& p : input.at("traces")) c.trace_paths.emplace_back(p.get<std::string>());
      c.env_path = input.at("env").get<std::string>();
      if (input.contains("trace_columns")) c.trace_map = trace_map_from_json(input.at("trace_columns"));
      if (input.contains("env_columns")) c.env_map = env_map_from_json(input.at("env_columns"));
      if (c.trace_paths.empty()) fail(ErrorCode::ConfigError, "input.traces is empty");
    }

    if (j.contains("tasks")) {
      c.tasks.clear();
      for (const auto& t : j.at("tasks")) c.tasks.push_back(parse_task(t.get<std::string>()));
    }
    if (j.contains("channels")) {
      c.channels.clear();
      for (const auto& t : j.at("channels")) c.channels.push_back(parse_channel(t.get<std::string>()));
    }
    c.zscore = j.value("zscore", c.zscore);
    c.day_offset_hours = j.value("day_offset_hours", c.day_offset_hours);
    c.windows.local_offset_hours = j.value("local_offset_hours", c.windows.local_offset_hours);
    if (j.contains("agreement")) {
      const std::string a = j.at("agreement").get<std::string>();
      if (a == "purity") {
        c.windows.agreement = labeling::Agreement::Purity;
      } else if (a == "majority") {
        c.windows.agreement = labeling::Agreement::Majority;
      } else {
        fail(ErrorCode::ConfigError, "agreement must be 'purity' or 'majority'");
      }
    }
    c.catalog_version = j.value("catalog_version", c.catalog_version);
    features::catalog(c.catalog_version);
    c.smote = j.value("smote", c.smote);
    c.smote_k = j.value("smote_k", c.smote_k);

    if (j.contains("classifiers")) {
      const json& cl = j.at("classifiers");
      c.classifiers.clear();
      if (cl.is_string() && cl.get<std::string>() == "automl") {
        c.automl = true;
      } else {
        for (const auto& k : cl) {
          const std::string name = k.get<std::string>();
          if (name == "automl") {
            c.automl = true;
          } else {
            c.classifiers.push_back(learn::parse_classifier(name));
          }
        }
      }
    }
    if (j.contains("automl")) {
      const json& a = j.at("automl");
      c.automl_budget = a.value("budget", c.automl_budget);
      c.automl_patience = a.value("patience", c.automl_patience);
    }
    if (j.contains("selection") && !j.at("selection").is_null()) {
      const json& s = j.at("selection");
      SelectionConfig sel;
      sel.max_k = s.value("k", sel.max_k);
      if (s.contains("classifier")) sel.classifier = learn::parse_classifier(s.at("classifier").get<std::string>());
      const std::string mode = s.value("mode", std::string("per_split"));
      if (mode == "per_split") {
        sel.mode = select::MiMode::PerSplit;
      } else if (mode == "global") {
        sel.mode = select::MiMode::Global;
      } else {
        fail(ErrorCode::ConfigError, "selection.mode must be 'per_split' or 'global'");
      }
      sel.bins = s.value("bins", sel.bins);
      c.selection = sel;
    }
    if (j.contains("split")) {
      const json& s = j.at("split");
      c.split.test_fraction = s.value("test_fraction", c.split.test_fraction);
      c.split.n_splits = s.value("n_splits", c.split.n_splits);
      c.split.validation_fraction = s.value("validation_fraction", c.split.validation_fraction);
    }
    c.split.seed = c.seed;
    c.profile = j.value("profile", c.profile);
    c.write_intermediates = j.value("write_intermediates", c.write_intermediates);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    fail(ErrorCode::ConfigError, std::string("config: ") + e.what());
  }
  return c;
}

namespace {

json map_json(const TraceColumnMap& m) {
  return {{"timestamp", m.timestamp},         {"timestamp_scale_ms", m.timestamp_scale_ms},
          {"potential", m.potential},         {"potential_scale_mv", m.potential_scale_mv},
          {"plant_column", m.plant_column},   {"plant_id", m.plant_id},
          {"channel_column", m.channel_column}, {"channel", to_string(m.channel)},
          {"delimiter", std::string(1, m.delimiter)}};
}

json map_json(const EnvColumnMap& m) {
  json fields = json::object();
  for (const auto& [f, name] : m.fields) fields[std::string(ingest::column_name(f))] = name;
  return {{"timestamp", m.timestamp},
          {"timestamp_scale_ms", m.timestamp_scale_ms},
          {"fields", fields},
          {"delimiter", std::string(1, m.delimiter)}};
}

}  // namespace

json ExperimentConfig::to_json() const {
  json input;
  if (synthetic) {
    input["synthetic"] = synthetic->to_json();
  } else {
    json traces = json::array();
    for (const auto& p : trace_paths) traces.push_back(p.string());
    input["traces"] = traces;
    input["env"] = env_path ? env_path->string() : "";
    if (trace_map) input["trace_columns"] = map_json(*trace_map);
    if (env_map) input["env_columns"] = map_json(*env_map);
  }
  json task_list = json::array();
  for (auto t : tasks) task_list.push_back(to_string(t));
  json channel_list = json::array();
  for (auto c : channels) channel_list.push_back(to_string(c));
  json clf = json::array();
  for (auto k : classifiers) clf.push_back(learn::to_string(k));
  if (automl) clf.push_back("automl");
  json j = {{"seed", seed},
            {"input", input},
            {"tasks", task_list},
            {"channels", channel_list},
            {"zscore", zscore},
            {"day_offset_hours", day_offset_hours},
            {"local_offset_hours", windows.local_offset_hours},
            {"agreement", windows.agreement == labeling::Agreement::Purity ? "purity" : "majority"},
            {"catalog_version", catalog_version},
            {"smote", smote},
            {"smote_k", smote_k},
            {"classifiers", clf},
            {"automl", {{"budget", automl_budget}, {"patience", automl_patience}}},
            {"split",
             {{"test_fraction", split.test_fraction},
              {"n_splits", split.n_splits},
              {"validation_fraction", split.validation_fraction}}},
            {"profile", profile},
            {"write_intermediates", write_intermediates}};
  if (selection) {
    j["selection"] = {{"k", selection->max_k},
                      {"classifier", learn::to_string(selection->classifier)},
                      {"mode", selection->mode == select::MiMode::PerSplit ? "per_split" : "global"},
                      {"bins", selection->bins}};
  } else {
    j["selection"] = nullptr;
  }
  return j;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const json& config) { return fnv1a_hex(config.dump()); }

json RunManifest::to_json() const {
  json st = json::array();
  for (const auto& s : stages) st.push_back({{"stage", s.stage}, {"duration_ms", s.duration_ms}});
  return {{"config_hash", config_hash},
          {"catalog_version", catalog_version},
          {"software_version", software_version},
          {"stages", st},
          {"artifacts", artifacts},
          {"outputs_hash", outputs_hash}};
}

StageError::StageError(std::string stage, ErrorCode code, const std::string& message)
    : Error(code, "stage '" + stage + "': " + message), stage_(std::move(stage)) {}

DirectoryLock::DirectoryLock(const fs::path& dir) : path_(dir / ".lock") {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::PathError, "cannot create run directory " + dir.string() + ": " + ec.message());
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (f == nullptr) {
    fail(ErrorCode::PathError, "run directory " + dir.string() + " is locked by another writer (remove " +
                                   path_.string() + " if stale)");
  }
  std::fclose(f);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

int exit_code_for(const Error& e) {
  return e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::PathError ? 2 : 1;
}

// ---------------------------------------------------------------------------
// Runner

namespace {

struct Source {
  std::string plant_id;
  Channel channel = Channel::Stem;
  std::optional<RawTrace> raw;
  std::optional<SparseSeries> downsampled;
};

struct Prepared {
  std::string plant_id;
  Channel channel = Channel::Stem;
  std::vector<UniformSeries> segments;
};

class Runner {
 public:
  explicit Runner(const ExperimentConfig& cfg) : cfg_(cfg), out_(cfg.output_dir) {}

  RunManifest run();

 private:
  template <class F>
  auto stage(const std::string& name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    struct Record {
      Runner* r;
      std::string name;
      std::chrono::steady_clock::time_point t0;
      ~Record() {
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        r->add_time(name, ms);
      }
    } record{this, name, t0};
    try {
      return body();
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      throw StageError(name, e.code(), e.what());
    } catch (const std::exception& e) {
      throw StageError(name, ErrorCode::IoError, e.what());
    }
  }

  void add_time(const std::string& name, double ms) {
    for (auto& s : timings_) {
      if (s.stage == name) {
        s.duration_ms += ms;
        return;
      }
    }
    timings_.push_back({name, ms});
  }

  fs::path artifact(const std::string& rel, bool metric) {
    artifacts_.insert(rel);
    if (metric) metrics_.insert(rel);
    return out_ / rel;
  }

  void write_json(const std::string& rel, const json& j, bool metric) {
    csv::write_file(artifact(rel, metric), j.dump(2) + "\n");
  }

  std::vector<Source> ingest();
  std::vector<Prepared> preprocess(std::vector<Source>& sources);
  features::FeatureMatrix label_and_featurize(Task task, Channel channel, const std::vector<Prepared>& prepared);
  void evaluate(Task task, Channel channel, const features::FeatureMatrix& m);
  void run_automl(Task task, Channel channel, const features::FeatureMatrix& m);
  void sweep(Task task, Channel channel, const features::FeatureMatrix& m);
  void profile(const std::vector<Prepared>& prepared);

  const ExperimentConfig& cfg_;
  fs::path out_;
  ingest::EnvSeries env_;
  std::vector<StageTiming> timings_;
  std::set<std::string> artifacts_;
  std::set<std::string> metrics_;
  json skipped_ = json::array();
  std::map<std::tuple<std::string, Channel, TimestampMs>, features::FeatureRow> feature_cache_;
};

std::string stem_name(Task task, Channel channel) {
  return std::string(to_string(task)) + "_" + std::string(to_string(channel));
}

bool wanted(const std::vector<Channel>& channels, Channel c) {
  return std::find(channels.begin(), channels.end(), c) != channels.end();
}

std::vector<Source> Runner::ingest() {
  std::vector<Source> sources;
  json summary = {{"traces", json::array()}};
  if (cfg_.synthetic) {
    const auto& sc = *cfg_.synthetic;
    const synth::Weather weather(sc);
    env_ = weather.env_series(sc.env_rate_hz, sc.seed);
    for (std::size_t p = 0; p < sc.plants; ++p) {
      for (Channel c : sc.channels) {
        if (!wanted(cfg_.channels, c)) continue;
        Source s{synth::plant_id(p), c, std::nullopt, synth::generate_downsampled(sc, weather, p, c)};
        summary["traces"].push_back({{"plant_id", s.plant_id}, {"channel", to_string(c)}, {"source", "synthetic"}});
        sources.push_back(std::move(s));
      }
    }
  } else {
    for (const auto& p : cfg_.trace_paths) {
      csv::require_file(p);
    }
    csv::require_file(*cfg_.env_path);
    for (const auto& p : cfg_.trace_paths) {
      std::vector<RawTrace> traces;
      if (cfg_.trace_map) {
        traces = adapt_trace_csv(p, *cfg_.trace_map);
      } else {
        traces.push_back(ingest::parse_trace_csv(p));
      }
      for (auto& t : traces) {
        if (!wanted(cfg_.channels, t.channel)) continue;
        summary["traces"].push_back({{"plant_id", t.plant_id},
                                     {"channel", to_string(t.channel)},
                                     {"source", p.string()},
                                     {"samples", t.samples.size()},
                                     {"duplicates", t.duplicate_count}});
        Source s{t.plant_id, t.channel, std::move(t), std::nullopt};
        sources.push_back(std::move(s));
      }
    }
    env_ = cfg_.env_map ? adapt_env_csv(*cfg_.env_path, *cfg_.env_map) : ingest::parse_env_csv(*cfg_.env_path);
  }
  summary["env_samples"] = env_.samples.size();
  summary["env_duplicates"] = env_.duplicate_count;
  write_json("ingest/summary.json", summary, false);
  return sources;
}

std::vector<Prepared> Runner::preprocess(std::vector<Source>& sources) {
  preprocess::PreprocessOptions opts;
  opts.coverage.day_offset_hours = cfg_.day_offset_hours;
  opts.zscore = cfg_.zscore;
  std::vector<Prepared> out;
  for (auto& s : sources) {
    const std::string name = s.plant_id + "_" + std::string(to_string(s.channel));
    preprocess::PreprocessResult r;
    try {
      r = s.raw ? preprocess::run(*s.raw, opts) : preprocess::run(*s.downsampled, opts);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoDays && e.code() != ErrorCode::TooSparse) throw;
      skipped_.push_back({{"stage", "preprocess"}, {"series", name}, {"reason", e.what()}});
      continue;
    }
    s.raw.reset();
    s.downsampled.reset();
    json cov = {{"plant_id", s.plant_id}, {"channel", to_string(s.channel)}, {"coverage", r.coverage.to_json()}};
    if (r.zscore_params) cov["zscore"] = {{"mu", r.zscore_params->mu}, {"sigma", r.zscore_params->sigma}};
    write_json("preprocess/" + name + "_coverage.json", cov, false);
    if (cfg_.write_intermediates) {
      preprocess::write_series(artifact("preprocess/" + name + ".csv", false), r.segments, r.zscore_params);
      artifacts_.insert("preprocess/" + name + ".csv.json");
    }
    out.push_back({s.plant_id, s.channel, std::move(r.segments)});
  }
  return out;
}

features::FeatureMatrix Runner::label_and_featurize(Task task, Channel channel, const std::vector<Prepared>& prepared) {
  const std::string name = stem_name(task, channel);
  const auto rule = labeling::rule_for(task);
  std::vector<labeling::LabeledWindow> windows;
  labeling::SkipReport skips;
  stage("label", [&] {
    for (const auto& p : prepared) {
      if (p.channel != channel) continue;
      auto set = labeling::extract_windows(p.segments, env_, rule, cfg_.windows);
      skips += set.skips;
      for (auto& w : set.windows) windows.push_back(std::move(w));
    }
    std::array<std::size_t, 2> counts{};
    for (const auto& w : windows) ++counts[static_cast<std::size_t>(w.label)];
    write_json("labels/" + name + "_summary.json",
               {{"task", to_string(task)},
                {"channel", to_string(channel)},
                {"class_counts",
                 {{std::string(class_name(task, 0)), counts[0]}, {std::string(class_name(task, 1)), counts[1]}}},
                {"skips", skips.to_json()}},
               true);
    if (cfg_.write_intermediates) labeling::write_windows_csv(artifact("labels/" + name + "_windows.csv", false), windows);
  });

  return stage("features", [&] {
    const auto& cat = features::catalog(cfg_.catalog_version);
    features::FeatureMatrix m;
    m.task = task;
    m.catalog_version = cat.version;
    m.names = cat.names();
    m.X.resize(static_cast<Eigen::Index>(windows.size()), static_cast<Eigen::Index>(m.names.size()));
    std::size_t imputed = 0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const auto& w = windows[i];
      const auto key = std::make_tuple(w.plant_id, w.channel, w.start_ms);
      auto it = feature_cache_.find(key);
      if (it == feature_cache_.end()) it = feature_cache_.emplace(key, features::compute_features(w.values, cat)).first;
      for (std::size_t j = 0; j < it->second.values.size(); ++j) {
        m.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = it->second.values[j];
        imputed += it->second.imputed[j];
      }
      m.y.push_back(w.label);
      m.provenance.push_back({w.plant_id, w.channel, w.start_ms});
    }
    features::write_matrix_csv(artifact("features/" + name + ".csv", false), m);
    artifacts_.insert("features/" + name + ".csv.json");
    write_json("features/" + name + "_imputed.json", {{"imputed_cells", imputed}}, true);
    return m;
  });
}

void Runner::evaluate(Task task, Channel channel, const features::FeatureMatrix& m) {
  eval::ProtocolOptions opts;
  opts.plan = cfg_.split;
  opts.smote = cfg_.smote;
  opts.smote_k = cfg_.smote_k;
  for (auto kind : cfg_.classifiers) {
    const std::string name = stem_name(task, channel) + "_" + std::string(learn::to_string(kind));
    const learn::PipelineSpec spec{{}, learn::ClassifierSpec::defaults(kind, mix_seed(cfg_.seed, 0xc1f))};
    const auto report = eval::evaluate_protocol(m, spec, opts);
    write_json("reports/" + name + ".json", report.to_json(), true);
    eval::write_pr_csv(artifact("pr/" + name + ".csv", true), report.pr);
  }
}

void Runner::run_automl(Task task, Channel channel, const features::FeatureMatrix& m) {
  const std::string name = stem_name(task, channel) + "_automl";
  const auto holdout = eval::test_holdout(m.y, cfg_.split);
  const auto pool = m.select_rows(holdout.train);
  const auto test = m.select_rows(holdout.val);
  automl::SearchOptions opts;
  opts.budget = cfg_.automl_budget;
  opts.patience = cfg_.automl_patience;
  opts.seed = mix_seed(cfg_.seed, 0xa070);
  opts.validation_fraction = cfg_.split.validation_fraction;
  opts.smote = cfg_.smote;
  opts.smote_k = cfg_.smote_k;
  auto result = automl::search(pool.X, pool.y, opts);
  const auto pred = result.pipeline.predict(test.X);
  const Vector score = result.pipeline.predict_score(test.X);
  const auto pr = eval::pr_curve(test.y, std::span<const double>(score.data(), static_cast<std::size_t>(score.size())),
                                 result.pipeline.minority_label());
  const auto recall = eval::per_class_recall(test.y, pred);
  json report = result.trace.summary_json();
  report["task"] = to_string(task);
  report["test_macro_f1"] = eval::macro_f1(test.y, pred);
  report["macro_f1_unit"] = "percent";
  report["per_class_recall"] = {{std::string(class_name(task, 0)), recall[0]}, {std::string(class_name(task, 1)), recall[1]}};
  report["pr_auc"] = pr.auc;
  report["baseline"] = pr.baseline;
  write_json("reports/" + name + ".json", report, true);
  eval::write_pr_csv(artifact("pr/" + name + ".csv", true), pr);
  csv::write_file(artifact("automl/" + name + "_trace.jsonl", true), result.trace.to_jsonl(false));
  csv::write_file(artifact("automl/" + name + "_timing.jsonl", false), result.trace.to_jsonl(true));
  result.pipeline.save(artifact("automl/" + name + "_model.json", true));
}

void Runner::sweep(Task task, Channel channel, const features::FeatureMatrix& m) {
  const auto& sel = *cfg_.selection;
  select::SweepOptions opts;
  opts.max_k = std::min(sel.max_k, m.cols());
  opts.bins = sel.bins;
  opts.mode = sel.mode;
  opts.protocol.plan = cfg_.split;
  opts.protocol.smote = cfg_.smote;
  opts.protocol.smote_k = cfg_.smote_k;
  const learn::PipelineSpec spec{{}, learn::ClassifierSpec::defaults(sel.classifier, mix_seed(cfg_.seed, 0xc1f))};
  const auto result = select::sweep_top_k(m, spec, opts);
  const std::string name = stem_name(task, channel);
  select::write_sweep_csv(artifact("select/" + name + "_sweep.csv", true), result);
  select::write_ranking_csv(artifact("select/" + name + "_mi.csv", true), result.ranking);
}

// Z-scores one plant/channel series with a single mean and std across its segments.
std::vector<UniformSeries> zscored(const std::vector<UniformSeries>& segments) {
  double sum = 0.0, n = 0.0;
  for (const auto& s : segments) {
    for (double v : s.values) sum += v;
    n += static_cast<double>(s.values.size());
  }
  const double mu = sum / n;
  double ss = 0.0;
  for (const auto& s : segments) {
    for (double v : s.values) ss += (v - mu) * (v - mu);
  }
  const double sigma = std::sqrt(ss / n);
  if (!(sigma > 0.0)) fail(ErrorCode::DegenerateSeries, "constant series cannot be z-scored");
  std::vector<UniformSeries> out = segments;
  for (auto& s : out) {
    for (double& v : s.values) v = (v - mu) / sigma;
    s.unit = Unit::ZScore;
  }
  return out;
}

void Runner::profile(const std::vector<Prepared>& prepared) {
  for (Channel c : cfg_.channels) {
    std::vector<UniformSeries> segments;
    for (const auto& p : prepared) {
      if (p.channel != c) continue;
      const auto z = cfg_.zscore ? p.segments : zscored(p.segments);
      segments.insert(segments.end(), z.begin(), z.end());
    }
    const auto days = eval::split_days(segments, cfg_.day_offset_hours);
    if (days.empty()) {
      skipped_.push_back({{"stage", "profile"}, {"channel", to_string(c)}, {"reason", "no complete days"}});
      continue;
    }
    const auto prof = eval::compute_daily_profile(days);
    eval::write_profile_csv(artifact("profile/" + std::string(to_string(c)) + ".csv", true), prof);
  }
}

RunManifest Runner::run() {
  auto sources = stage("ingest", [&] { return ingest(); });
  const auto prepared = stage("preprocess", [&] { return preprocess(sources); });
  sources.clear();

  for (Task task : cfg_.tasks) {
    for (Channel channel : cfg_.channels) {
      const auto m = label_and_featurize(task, channel, prepared);
      const std::string name = stem_name(task, channel);
      std::array<std::size_t, 2> counts{};
      for (Label l : m.y) ++counts[static_cast<std::size_t>(l)];
      // Stratified test, validation and SMOTE neighbours need a handful per class.
      if (std::min(counts[0], counts[1]) < 10) {
        skipped_.push_back({{"stage", "evaluate"},
                            {"dataset", name},
                            {"reason", "fewer than 10 windows in a class"},
                            {"class_counts", counts}});
        continue;
      }
      stage("train+evaluate", [&] { evaluate(task, channel, m); });
      if (cfg_.automl) stage("automl", [&] { run_automl(task, channel, m); });
      if (cfg_.selection) stage("select", [&] { sweep(task, channel, m); });
    }
  }
  if (cfg_.profile) stage("profile", [&] { profile(prepared); });
  write_json("skipped.json", skipped_, true);

  RunManifest manifest;
  manifest.config_hash = config_hash(cfg_.to_json());
  manifest.catalog_version = features::catalog(cfg_.catalog_version).version;
  manifest.stages = timings_;
  artifacts_.insert("manifest.json");
  artifacts_.insert("config.json");
  manifest.artifacts.assign(artifacts_.begin(), artifacts_.end());
  std::string digest;
  for (const auto& rel : metrics_) {
    digest += rel;
    digest += '\0';
    digest += csv::read_file(out_ / rel);
    digest += '\0';
  }
  manifest.outputs_hash = fnv1a_hex(digest);
  csv::write_file(out_ / "config.json", cfg_.to_json().dump(2) + "\n");
  csv::write_file(out_ / "manifest.json", manifest.to_json().dump(2) + "\n");
  return manifest;
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config) {
  if (config.output_dir.empty()) fail(ErrorCode::ConfigError, "no output directory given");
  if (!config.synthetic) {
    for (const auto& p : config.trace_paths) csv::require_file(p);
    if (config.env_path) csv::require_file(*config.env_path);
  }
  DirectoryLock lock(config.output_dir);
  Runner runner(config);
  return runner.run();
}

}  // namespace phyto::experiment
