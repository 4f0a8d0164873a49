// Command-line front end. Every subcommand reads and writes the documented
// artifact formats, so stages can be chained through files.
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "phyto/automl.hpp"
#include "phyto/csv.hpp"
#include "phyto/eval.hpp"
#include "phyto/experiment.hpp"
#include "phyto/features.hpp"
#include "phyto/ingest.hpp"
#include "phyto/labeling.hpp"
#include "phyto/learn/pipeline.hpp"
#include "phyto/preprocess.hpp"
#include "phyto/resample.hpp"
#include "phyto/select.hpp"
#include "phyto/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace phyto;

namespace {

json read_json_file(const fs::path& path) {
  csv::require_file(path);
  try {
    return json::parse(csv::read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) { csv::write_file(path, j.dump(2) + "\n"); }

learn::PipelineSpec pipeline_from_flags(const std::string& classifier, const std::vector<std::string>& transforms,
                                        std::uint64_t seed) {
  learn::PipelineSpec spec;
  for (const auto& t : transforms) spec.transforms.push_back(learn::TransformSpec::defaults(learn::parse_transform(t)));
  spec.classifier = learn::ClassifierSpec::defaults(learn::parse_classifier(classifier), seed);
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plant electrophysiology classification pipeline"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  fs::path out;

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate a raw trace CSV and report daily coverage");
  fs::path ingest_trace;
  double day_offset = 0.0;
  ingest_cmd->add_option("--trace", ingest_trace, "Raw trace CSV")->required();
  ingest_cmd->add_option("--out", out, "Output directory")->required();
  ingest_cmd->add_option("--day-offset-hours", day_offset, "Shift of day boundaries from UTC midnight");

  // preprocess
  auto* prep_cmd = app.add_subcommand("preprocess", "Downsample, filter by coverage, interpolate, z-score");
  fs::path prep_trace;
  bool zscore = false;
  double target_rate = 1.0;
  prep_cmd->add_option("--trace", prep_trace, "Raw trace CSV")->required();
  prep_cmd->add_option("--out", out, "Output series CSV")->required();
  prep_cmd->add_flag("--zscore", zscore, "Z-score the retained series");
  prep_cmd->add_option("--rate", target_rate, "Target rate in Hz");
  prep_cmd->add_option("--day-offset-hours", day_offset, "Shift of day boundaries from UTC midnight");

  // label
  auto* label_cmd = app.add_subcommand("label", "Cut and label 1-hour windows");
  std::vector<fs::path> series_paths;
  fs::path env_path;
  std::string task_name;
  double local_offset = 1.0;
  bool majority = false;
  label_cmd->add_option("--series", series_paths, "Preprocessed series CSVs")->required();
  label_cmd->add_option("--env", env_path, "Weather CSV")->required();
  label_cmd->add_option("--task", task_name, "day_night | rain_dry | warm_cold | windy_calm")->required();
  label_cmd->add_option("--out", out, "Output windows CSV")->required();
  label_cmd->add_option("--local-offset-hours", local_offset, "Local time offset for the 08-20 h restriction");
  label_cmd->add_flag("--majority", majority, "Label impure hours by majority instead of skipping them");

  // features
  auto* feat_cmd = app.add_subcommand("features", "Compute the feature matrix of labelled windows");
  std::vector<fs::path> window_paths;
  std::string catalog_version = "v1";
  feat_cmd->add_option("--windows", window_paths, "Windows CSVs")->required();
  feat_cmd->add_option("--out", out, "Output matrix CSV")->required();
  feat_cmd->add_option("--catalog", catalog_version, "Feature catalog version");

  // train
  auto* train_cmd = app.add_subcommand("train", "Fit a pipeline on a whole feature matrix");
  fs::path matrix_path;
  std::string classifier = "rf";
  std::vector<std::string> transforms;
  bool smote = true;
  train_cmd->add_option("--data", matrix_path, "Feature matrix CSV")->required();
  train_cmd->add_option("--classifier", classifier, "gnb | qda | knn | svm | dt | rf | etc | mlp");
  train_cmd->add_option("--transform", transforms, "nor | std | minmax | vt | pca (repeatable, in order)");
  train_cmd->add_option("--out", out, "Output model JSON")->required();
  train_cmd->add_option("--seed", seed, "Seed")->required();
  train_cmd->add_flag("!--no-smote", smote, "Skip SMOTE balancing");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Run the split protocol and write metrics");
  eval_cmd->add_option("--data", matrix_path, "Feature matrix CSV")->required();
  eval_cmd->add_option("--classifier", classifier, "gnb | qda | knn | svm | dt | rf | etc | mlp");
  eval_cmd->add_option("--transform", transforms, "nor | std | minmax | vt | pca (repeatable, in order)");
  eval_cmd->add_option("--out", out, "Output directory")->required();
  eval_cmd->add_option("--seed", seed, "Seed")->required();
  eval_cmd->add_flag("!--no-smote", smote, "Skip SMOTE balancing");

  // select
  auto* sel_cmd = app.add_subcommand("select", "Mutual-information ranking and top-k sweep");
  std::size_t max_k = 50;
  std::string mi_mode = "per_split";
  sel_cmd->add_option("--data", matrix_path, "Feature matrix CSV")->required();
  sel_cmd->add_option("--classifier", classifier, "Classifier retrained for each k");
  sel_cmd->add_option("--k", max_k, "Largest k");
  sel_cmd->add_option("--mode", mi_mode, "per_split | global")->check(CLI::IsMember({"per_split", "global"}));
  sel_cmd->add_option("--out", out, "Output directory")->required();
  sel_cmd->add_option("--seed", seed, "Seed")->required();

  // automl
  auto* automl_cmd = app.add_subcommand("automl", "Two-phase pipeline search");
  std::size_t budget = 1024;
  std::size_t patience = 100;
  automl_cmd->add_option("--data", matrix_path, "Feature matrix CSV")->required();
  automl_cmd->add_option("--budget", budget, "Phase-b draw budget");
  automl_cmd->add_option("--patience", patience, "Non-improving draws before stopping");
  automl_cmd->add_option("--out", out, "Output directory")->required();
  automl_cmd->add_option("--seed", seed, "Seed")->required();

  // profile
  auto* prof_cmd = app.add_subcommand("profile", "Daily mean/std profile across days");
  prof_cmd->add_option("--series", series_paths, "Preprocessed series CSVs")->required();
  prof_cmd->add_option("--out", out, "Output profile CSV")->required();
  prof_cmd->add_option("--day-offset-hours", day_offset, "Shift of day boundaries from UTC midnight");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Write synthetic traces and weather");
  fs::path synth_config;
  std::size_t plants = 0, days = 0;
  double strength = -1.0;
  double raw_rate = 0.0;
  synth_cmd->add_option("--config", synth_config, "Generator JSON");
  synth_cmd->add_option("--plants", plants, "Number of plants");
  synth_cmd->add_option("--days", days, "Number of days");
  synth_cmd->add_option("--strength", strength, "Scale of every planted signature");
  synth_cmd->add_option("--raw-rate", raw_rate, "Raw sampling rate in Hz");
  synth_cmd->add_option("--out", out, "Output directory")->required();
  synth_cmd->add_option("--seed", seed, "Seed")->required();

  // run
  auto* run_cmd = app.add_subcommand("run", "Full pipeline from an experiment config");
  fs::path config_path;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::size_t> run_budget, run_patience;
  run_cmd->add_option("--config", config_path, "Experiment JSON")->required();
  run_cmd->add_option("--out", out, "Run directory (overrides output_dir)");
  run_cmd->add_option("--seed", run_seed, "Overrides the config seed");
  run_cmd->add_option("--budget", run_budget, "Overrides automl.budget");
  run_cmd->add_option("--patience", run_patience, "Overrides automl.patience");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ingest_cmd) {
      const auto trace = ingest::parse_trace_csv(ingest_trace);
      ingest::CoverageOptions cov;
      // Coverage is judged on the 1 Hz grid the pipeline works at.
      const auto down = preprocess::downsample_mean(trace, 1.0);
      cov.expected_rate_hz = 1.0;
      cov.day_offset_hours = day_offset;
      std::vector<TimestampMs> present;
      for (std::size_t i = 0; i < down.values.size(); ++i) {
        if (down.values[i]) present.push_back(down.timestamp_at(i));
      }
      const auto report = ingest::coverage_report(present, cov);
      fs::create_directories(out);
      csv::write_file(out / "trace.csv", ingest::format_trace_csv(trace));
      write_json_file(out / "coverage.json", {{"plant_id", trace.plant_id},
                                              {"channel", to_string(trace.channel)},
                                              {"samples", trace.samples.size()},
                                              {"duplicates", trace.duplicate_count},
                                              {"coverage", report.to_json()}});
      std::cout << trace.samples.size() << " samples, " << report.retained_days() << " retained days\n";
    } else if (*prep_cmd) {
      preprocess::PreprocessOptions opts;
      opts.target_rate_hz = target_rate;
      opts.zscore = zscore;
      opts.coverage.day_offset_hours = day_offset;
      const auto r = preprocess::run(ingest::parse_trace_csv(prep_trace), opts);
      preprocess::write_series(out, r.segments, r.zscore_params);
      std::cout << r.segments.size() << " segments, " << r.coverage.retained_days() << " retained days\n";
    } else if (*label_cmd) {
      const auto env = ingest::parse_env_csv(env_path);
      labeling::WindowOptions opts;
      opts.local_offset_hours = local_offset;
      opts.agreement = majority ? labeling::Agreement::Majority : labeling::Agreement::Purity;
      const auto rule = labeling::rule_for(parse_task(task_name));
      std::vector<labeling::LabeledWindow> windows;
      labeling::SkipReport skips;
      for (const auto& p : series_paths) {
        auto set = labeling::extract_windows(preprocess::read_series(p).segments, env, rule, opts);
        skips += set.skips;
        for (auto& w : set.windows) windows.push_back(std::move(w));
      }
      labeling::write_windows_csv(out, windows);
      write_json_file(out.string() + ".skips.json", skips.to_json());
      std::cout << windows.size() << " windows\n";
    } else if (*feat_cmd) {
      std::vector<labeling::LabeledWindow> windows;
      for (const auto& p : window_paths) {
        auto part = labeling::read_windows_csv(p);
        for (auto& w : part) windows.push_back(std::move(w));
      }
      const auto built = features::build_matrix(windows, features::catalog(catalog_version));
      features::write_matrix_csv(out, built.matrix);
      std::cout << built.matrix.rows() << " rows, " << built.imputed_cells << " imputed cells\n";
    } else if (*train_cmd) {
      const auto m = features::read_matrix_csv(matrix_path);
      // Without explicit transforms the model gets the protocol's min-max scaling.
      const auto spec = pipeline_from_flags(classifier, transforms.empty() ? std::vector<std::string>{"minmax"} : transforms, seed);
      Matrix X = m.X;
      std::vector<Label> y = m.y;
      if (smote) {
        auto balanced = resample::smote(X, y, {5, mix_seed(seed, 2)});
        X = std::move(balanced.X);
        y = std::move(balanced.y);
      }
      learn::fit(spec, X, y).save(out);
      std::cout << "saved " << spec.describe() << " to " << out.string() << "\n";
    } else if (*eval_cmd) {
      const auto m = features::read_matrix_csv(matrix_path);
      eval::ProtocolOptions opts;
      opts.plan.seed = seed;
      opts.smote = smote;
      const auto report = eval::evaluate_protocol(m, pipeline_from_flags(classifier, transforms, mix_seed(seed, 0xc1f)), opts);
      fs::create_directories(out);
      write_json_file(out / "report.json", report.to_json());
      eval::write_pr_csv(out / "pr_curve.csv", report.pr);
      std::printf("macro F1 %.2f +- %.2f\n", report.test_macro_f1_mean, report.test_macro_f1_std);
    } else if (*sel_cmd) {
      const auto m = features::read_matrix_csv(matrix_path);
      select::SweepOptions opts;
      opts.max_k = std::min(max_k, m.cols());
      opts.mode = mi_mode == "global" ? select::MiMode::Global : select::MiMode::PerSplit;
      opts.protocol.plan.seed = seed;
      const auto sweep = select::sweep_top_k(m, pipeline_from_flags(classifier, {}, mix_seed(seed, 0xc1f)), opts);
      fs::create_directories(out);
      select::write_sweep_csv(out / "sweep.csv", sweep);
      select::write_ranking_csv(out / "mi_ranking.csv", sweep.ranking);
    } else if (*automl_cmd) {
      const auto m = features::read_matrix_csv(matrix_path);
      automl::SearchOptions opts;
      opts.budget = budget;
      opts.patience = patience;
      opts.seed = seed;
      const auto result = automl::search(m.X, m.y, opts);
      fs::create_directories(out);
      csv::write_file(out / "trace.jsonl", result.trace.to_jsonl(true));
      write_json_file(out / "summary.json", result.trace.summary_json());
      result.pipeline.save(out / "model.json");
      std::printf("best %s, validation macro F1 %.2f\n", result.trace.best().spec.describe().c_str(),
                  result.trace.best().val_macro_f1.value_or(0.0));
    } else if (*prof_cmd) {
      std::vector<UniformSeries> segments;
      for (const auto& p : series_paths) {
        auto loaded = preprocess::read_series(p);
        segments.insert(segments.end(), loaded.segments.begin(), loaded.segments.end());
      }
      const auto profile = eval::compute_daily_profile(eval::split_days(segments, day_offset));
      eval::write_profile_csv(out, profile);
      std::cout << profile.days << " days\n";
    } else if (*synth_cmd) {
      json j = synth_config.empty() ? json::object() : read_json_file(synth_config);
      j["seed"] = seed;
      if (plants > 0) j["plants"] = plants;
      if (days > 0) j["days"] = days;
      if (strength >= 0.0) j["strengths"] = strength;
      if (raw_rate > 0.0) j["raw_rate_hz"] = raw_rate;
      const auto files = synth::write_synthetic(synth::SynthConfig::from_json(j), out);
      std::cout << files.traces.size() << " traces written to " << out.string() << "\n";
    } else if (*run_cmd) {
      json j = read_json_file(config_path);
      if (run_seed) j["seed"] = *run_seed;
      if (!out.empty()) j["output_dir"] = out.string();
      if (run_budget) j["automl"]["budget"] = *run_budget;
      if (run_patience) j["automl"]["patience"] = *run_patience;
      const auto manifest = experiment::run_experiment(experiment::ExperimentConfig::from_json(j));
      std::cout << "run complete, outputs hash " << manifest.outputs_hash << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return experiment::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
