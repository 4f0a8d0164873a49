#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "phyto/csv.hpp"
#include "phyto/experiment.hpp"
#include "test_util.hpp"

using namespace phyto;
using namespace phyto::experiment;
using phyto::test::TempDir;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_config(const fs::path& out) {
  return {{"seed", 17},
          {"output_dir", out.string()},
          {"input", {{"synthetic", {{"plants", 1}, {"days", 2}, {"raw_rate_hz", 5.0}, {"channels", {"stem"}}}}}},
          {"tasks", {"day_night"}},
          {"channels", {"stem"}},
          {"classifiers", {"gnb"}},
          {"selection", {{"k", 3}, {"classifier", "gnb"}}},
          {"split", {{"n_splits", 3}}}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PHYTO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("small synthetic run writes reports and a manifest, reproducibly") {
  TempDir dir;
  const auto a = run_experiment(ExperimentConfig::from_json(small_config(dir.path() / "a")));
  const auto b = run_experiment(ExperimentConfig::from_json(small_config(dir.path() / "b")));
  CHECK(a.outputs_hash == b.outputs_hash);
  CHECK(a.config_hash == b.config_hash);  // the output directory is not hashed
  CHECK(a.catalog_version == "v1");
  CHECK(a.software_version == kSoftwareVersion);

  const fs::path report = dir.path() / "a" / "reports" / "day_night_stem_gnb.json";
  REQUIRE(fs::exists(report));
  const auto j = nlohmann::json::parse(slurp(report));
  CHECK(j.contains("macro_f1_mean"));
  CHECK(j.contains("pr_auc"));
  CHECK(j.at("macro_f1_unit") == "percent");
  CHECK(slurp(report) == slurp(dir.path() / "b" / "reports" / "day_night_stem_gnb.json"));
  CHECK(fs::exists(dir.path() / "a" / "manifest.json"));
  CHECK(fs::exists(dir.path() / "a" / "select" / "day_night_stem_sweep.csv"));
  CHECK_FALSE(fs::exists(dir.path() / "a" / ".lock"));
  for (const auto& art : a.artifacts) CHECK(fs::exists(dir.path() / "a" / art));
}

TEST_CASE("config hash ignores key order") {
  const auto j1 = nlohmann::json::parse(R"({"seed": 1, "input": {"env": "e", "traces": ["t"]}, "smote": true})");
  const auto j2 = nlohmann::json::parse(R"({"smote": true, "input": {"traces": ["t"], "env": "e"}, "seed": 1})");
  CHECK(config_hash(j1) == config_hash(j2));
  CHECK(config_hash(ExperimentConfig::from_json(j1).to_json()) == config_hash(ExperimentConfig::from_json(j2).to_json()));
  auto j3 = j1;
  j3["seed"] = 2;
  CHECK(config_hash(j1) != config_hash(j3));
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("config errors") {
  auto code = [](const nlohmann::json& j) {
    try {
      ExperimentConfig::from_json(j);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  CHECK(code(nlohmann::json::parse(R"({"input": {"synthetic": {}}})")) == ErrorCode::ConfigError);
  CHECK(code(nlohmann::json::parse(R"({"seed": 1, "input": {"synthetic": {}}, "tasks": ["sunny"]})")) ==
        ErrorCode::ConfigError);
  CHECK(code(nlohmann::json::parse(R"({"seed": 1, "input": {"synthetic": {}}, "classifiers": ["xgb"]})")) ==
        ErrorCode::ConfigError);
}

TEST_CASE("missing input file is a path error with exit code 2") {
  TempDir dir;
  nlohmann::json j = {{"seed", 1},
                      {"output_dir", (dir.path() / "run").string()},
                      {"input", {{"traces", {(dir.path() / "nope.csv").string()}}, {"env", (dir.path() / "env.csv").string()}}}};
  try {
    run_experiment(ExperimentConfig::from_json(j));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PathError);
    CHECK(exit_code_for(e) == 2);
  }
  const fs::path cfg = dir.path() / "cfg.json";
  csv::write_file(cfg, j.dump());
  CHECK(run_cli("run --config " + cfg.string()) == 2);
  CHECK(run_cli("ingest --trace " + (dir.path() / "nope.csv").string() + " --out " + dir.path().string()) == 2);
  CHECK(run_cli("--no-such-flag") == 2);
  CHECK(run_cli("--help") == 0);
}

TEST_CASE("a locked run directory is refused") {
  TempDir dir;
  const fs::path out = dir.path() / "run";
  DirectoryLock held(out);
  try {
    DirectoryLock again(out);
    FAIL("expected a lock error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PathError);
  }
}

TEST_CASE("column-mapped adapter reads foreign layouts") {
  TempDir dir;
  const auto trace = dir.file("t.csv", "time_s;uv;who\n0;1000;p1\n1;2000;p1\n0.5;3000;p2\n");
  TraceColumnMap m;
  m.timestamp = "time_s";
  m.timestamp_scale_ms = 1000.0;
  m.potential = "uv";
  m.potential_scale_mv = 0.001;
  m.plant_column = "who";
  m.delimiter = ';';
  const auto traces = adapt_trace_csv(trace, m);
  REQUIRE(traces.size() == 2);
  CHECK(traces[0].plant_id == "p1");
  REQUIRE(traces[0].samples.size() == 2);
  CHECK(traces[0].samples[1].timestamp_ms == 1000);
  CHECK(traces[0].samples[1].potential_mv == doctest::Approx(2.0));
  CHECK(traces[1].samples[0].timestamp_ms == 500);
}

}  // TEST_SUITE
