#include "support.hpp"

#include "scgbin/cli/commands.hpp"
#include "scgbin/cli/config.hpp"
#include "scgbin/cli/experiment.hpp"
#include "scgbin/error.hpp"
#include "scgbin/text_io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

using namespace scgbin;
using namespace scgbin::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "scgbin");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string write_config(const fs::path& dir, const std::string& name, const json& j) {
  const fs::path p = dir / name;
  std::ofstream(p) << j.dump(1);
  return p.string();
}

// Two short subjects at 2 kHz with a tiny grid: seconds, not minutes.
json small_config() {
  return json{{"seed", 3},
              {"subjects", 2},
              {"synth", {{"duration_s", 40}, {"trials", 1}, {"rate_hz", 2000}, {"window_length", 820}}},
              {"pipeline", {{"window_length", 820}}},
              {"experiment",
               {{"bin_counts", {8, 32}}, {"k", 5}, {"cost_grid", {1, 16}}, {"gamma_grid", {0.001, 0.01}}}}};
}

}  // namespace

TEST_CASE("config: defaults, overrides and unknown keys") {
  const AppConfig d = app_config_from_json(json::object());
  CHECK(d.synthetic_subjects == 7);
  CHECK(d.experiment.bin_counts == std::vector<Index>{16, 32, 64, 128, 256, 512, 1024});
  CHECK(d.experiment.k == 10);
  CHECK(d.pipeline.lowpass_hz == 100.0);

  const AppConfig c = app_config_from_json(small_config());
  CHECK(c.seed == 3);
  CHECK(c.synthetic_subjects == 2);
  CHECK(c.synth.rate_hz == 2000.0);
  CHECK(c.experiment.cost_grid == std::vector<double>{1.0, 16.0});
  CHECK(app_config_from_json(to_json(c)).seed == c.seed);
  CHECK(to_json(app_config_from_json(to_json(c))) == to_json(c));

  CHECK_THROWS_WITH_AS(app_config_from_json(json{{"experimnet", json::object()}}), doctest::Contains("experimnet"),
                       ParameterError);
  CHECK_THROWS_WITH_AS(app_config_from_json(json{{"synth", {{"rate", 1}}}}), doctest::Contains("synth.rate"),
                       ParameterError);
  CHECK_THROWS_WITH_AS(app_config_from_json(json{{"experiment", {{"foo", 1}}}}), doctest::Contains("foo"),
                       ParameterError);
  CHECK_THROWS_AS(app_config_from_json(json::array()), ParameterError);
}

TEST_CASE("config: validation names the field") {
  AppConfig c;
  c.experiment.k = 1;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("experiment.k"), ParameterError);
  AppConfig b;
  b.experiment.bin_counts = {8, 5000};
  CHECK_THROWS_WITH_AS(b.validate(), doctest::Contains("experiment.bin_counts"), ParameterError);
  AppConfig t;
  t.pipeline.detect.corr_threshold = 1.5;
  CHECK_THROWS_WITH_AS(t.validate(), doctest::Contains("corr_threshold"), ParameterError);
}

TEST_CASE("parse_bin_list and config_hash") {
  CHECK(parse_bin_list("16,32, 64") == std::vector<Index>{16, 32, 64});
  CHECK_THROWS_AS(parse_bin_list("16,,32"), ParameterError);
  CHECK_THROWS_AS(parse_bin_list("0"), ParameterError);
  CHECK_THROWS_AS(parse_bin_list("x"), ParameterError);
  CHECK(config_hash(json{{"a", 1}}) == config_hash(json{{"a", 1}}));
  CHECK(config_hash(json{{"a", 1}}) != config_hash(json{{"a", 2}}));
}

TEST_CASE("run_cli: exit codes") {
  const fs::path dir = testing::scratch_dir("cli_codes");
  CHECK(run({}).code == kExitConfig);
  CHECK(run({"nonsense"}).code == kExitConfig);
  CHECK(run({"--help"}).code == kExitOk);

  const std::string bad_ie = write_config(dir, "ie.json", json{{"synth", {{"ie_ratio", 0}}}});
  const CliResult r = run({"synth", "--config", bad_ie, "--out", (dir / "s").string()});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("ie_ratio") != std::string::npos);

  const std::string unknown = write_config(dir, "unknown.json", json{{"experiment", {{"foo", 1}}}});
  CHECK(run({"experiment", "--config", unknown, "--out", (dir / "e").string()}).code == kExitConfig);

  const CliResult missing = run({"experiment", "--config", (dir / "absent.json").string(), "--out", (dir / "e").string()});
  CHECK(missing.code == kExitConfig);
  CHECK(missing.err.find("absent.json") != std::string::npos);

  std::ofstream(dir / "broken.json") << "{not json";
  CHECK(run({"experiment", "--config", (dir / "broken.json").string(), "--out", (dir / "e").string()}).code ==
        kExitConfig);
}

TEST_CASE("run_cli: synth, pipeline, bin, train and evaluate end to end") {
  const fs::path dir = testing::scratch_dir("cli_flow");
  const std::string cfg = write_config(dir, "cfg.json", small_config());

  const CliResult s = run({"synth", "--config", cfg, "--out", (dir / "syn").string()});
  REQUIRE(s.code == kExitOk);
  CHECK(fs::exists(dir / "syn" / "template.f32"));
  CHECK(fs::exists(dir / "syn" / "s01" / "trial_0" / "truth.json"));
  CHECK(fs::exists(dir / "syn" / "s02" / "trial_0" / "scg.f32"));

  const CliResult p = run({"pipeline", "--config", cfg, "--recording", (dir / "syn" / "s01" / "trial_0").string(),
                           "--template", (dir / "syn" / "template.f32").string(), "--bins", "8,32", "--out",
                           (dir / "pipe").string()});
  REQUIRE(p.code == kExitOk);
  CHECK(p.out.find("ground truth:") != std::string::npos);
  CHECK(fs::exists(dir / "pipe" / "events.jsonl"));
  CHECK(fs::exists(dir / "pipe" / "partition_aw_8.json"));
  CHECK(fs::exists(dir / "pipe" / "features_aw_32.csv"));
  const std::string events = (dir / "pipe" / "events.jsonl").string();

  const CliResult b = run({"bin", "--config", cfg, "--events", events, "--method", "ew", "--bins", "16", "--out",
                           (dir / "bin").string()});
  REQUIRE(b.code == kExitOk);
  CHECK(fs::exists(dir / "bin" / "partition_ew_16.json"));
  CHECK(fs::exists(dir / "bin" / "features_ew_16.csv"));

  const std::string model = (dir / "model.json").string();
  const CliResult t = run({"train", "--config", cfg, "--events", events, "--bins", "32", "--out", model});
  REQUIRE(t.code == kExitOk);
  const json mj = json::parse(read_file(model));
  CHECK(mj.contains("selection"));

  const CliResult held = run({"evaluate", "--config", cfg, "--events", events, "--model", model, "--out",
                              (dir / "held.json").string()});
  REQUIRE(held.code == kExitOk);
  const json hj = json::parse(read_file(dir / "held.json"));
  CHECK(hj.at("mode") == "held_out");
  // Scored on its own training set, the model must fit well.
  CHECK(hj.at("metrics").at("accuracy").get<double>() >= 0.9);

  const CliResult cv = run({"evaluate", "--config", cfg, "--events", events, "--bins", "32", "--cost", "16",
                            "--gamma", "0.01", "--out", (dir / "cv.json").string()});
  REQUIRE(cv.code == kExitOk);
  const json cj = json::parse(read_file(dir / "cv.json"));
  CHECK(cj.at("mode") == "cross_validation");

  // A threshold nothing reaches leaves the pipeline with no events.
  json strict = small_config();
  strict["pipeline"]["corr_threshold"] = 1.0;
  const std::string strict_cfg = write_config(dir, "strict.json", strict);
  const CliResult empty = run({"pipeline", "--config", strict_cfg, "--recording",
                               (dir / "syn" / "s01" / "trial_0").string(), "--template",
                               (dir / "syn" / "template.f32").string(), "--out", (dir / "pipe_empty").string()});
  CHECK(empty.code == kExitEmpty);

  // One solver iteration cannot converge.
  json capped = small_config();
  capped["experiment"]["max_iterations"] = 1;
  const std::string capped_cfg = write_config(dir, "capped.json", capped);
  CHECK(run({"train", "--config", capped_cfg, "--events", events, "--cost", "16", "--gamma", "0.01", "--out",
             (dir / "m2.json").string()})
            .code == kExitConvergence);
}

TEST_CASE("experiment: byte-identical results across jobs, resume reuses cells") {
  const fs::path dir = testing::scratch_dir("cli_experiment");
  const std::string cfg = write_config(dir, "cfg.json", small_config());

  const CliResult one = run({"experiment", "--config", cfg, "--jobs", "1", "--out", (dir / "j1").string()});
  REQUIRE(one.code == kExitOk);
  const CliResult two = run({"experiment", "--config", cfg, "--jobs", "2", "--out", (dir / "j2").string()});
  REQUIRE(two.code == kExitOk);
  for (const char* f : {"results.csv", "summary.csv", "trend.csv", "table.md", "trend.svg"})
    CHECK(read_file(dir / "j1" / f) == read_file(dir / "j2" / f));
  CHECK(fs::exists(dir / "j1" / "cells"));

  // 2 subjects x 2 methods x 2 bin counts; header plus 8 rows.
  const std::string csv = read_file(dir / "j1" / "results.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
  CHECK(csv.rfind("subject,method,bins,accuracy,f1,accuracy_sd,f1_sd,cost,gamma,achieved_bins,seed", 0) == 0);

  const CliResult again = run({"experiment", "--config", cfg, "--jobs", "2", "--out", (dir / "j1").string()});
  REQUIRE(again.code == kExitOk);
  CHECK(again.out.find("0 computed, 8 restored") != std::string::npos);
  CHECK(read_file(dir / "j1" / "results.csv") == csv);

  // Losing one cell file recomputes just that cell, with the same result.
  fs::path victim;
  for (const auto& e : fs::directory_iterator(dir / "j1" / "cells"))
    if (e.path().filename().string().find("_aw_") != std::string::npos) victim = e.path();
  REQUIRE(!victim.empty());
  fs::remove(victim);
  const CliResult partial = run({"experiment", "--config", cfg, "--out", (dir / "j1").string()});
  REQUIRE(partial.code == kExitOk);
  CHECK(partial.out.find("1 computed, 7 restored") != std::string::npos);
  CHECK(read_file(dir / "j1" / "results.csv") == csv);

  // A different seed invalidates every stored cell.
  const CliResult reseeded = run({"experiment", "--config", cfg, "--seed", "4", "--out", (dir / "j1").string()});
  REQUIRE(reseeded.code == kExitOk);
  CHECK(reseeded.out.find("8 computed, 0 restored") != std::string::npos);
}

TEST_CASE("parallel_for: every index once, lowest failure rethrown") {
  for (int jobs : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(50);
    parallel_for(50, jobs, [&](int i) { ++hits[static_cast<std::size_t>(i)]; });
    for (const auto& h : hits) CHECK(h.load() == 1);
    try {
      parallel_for(20, jobs, [](int i) {
        if (i == 7 || i == 13) throw std::runtime_error("task " + std::to_string(i));
      });
      FAIL("expected a rethrow");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "task 7");
    }
  }
  int calls = 0;
  parallel_for(0, 4, [&](int) { ++calls; });
  CHECK(calls == 0);
}

TEST_CASE("fold_seed: distinct per subject, fixed per master seed") {
  CHECK(fold_seed(1, 0) == fold_seed(1, 0));
  CHECK(fold_seed(1, 0) != fold_seed(1, 1));
  CHECK(fold_seed(1, 0) != fold_seed(2, 0));
}
