#include <algorithm>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "climashift/config.hpp"
#include "climashift/errors.hpp"
#include "climashift/file_util.hpp"
#include "climashift/harness.hpp"
#include "test_support.hpp"

using namespace climashift;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json small_config(const fs::path& out) {
  return json{{"seed", 3},
              {"grid", {{"n_lat", 3}, {"n_lon", 4}}},
              {"scenarios",
               json::array({{{"id", "historical"}, {"first_year", 1990}, {"last_year", 2014}},
                            {{"id", "ssp126"}, {"first_year", 2015}, {"last_year", 2030}},
                            {{"id", "ssp245"}, {"first_year", 2015}, {"last_year", 2030}},
                            {{"id", "ssp370"}, {"first_year", 2015}, {"last_year", 2030}},
                            {{"id", "ssp585"}, {"first_year", 2015}, {"last_year", 2030}}})},
              {"oracles", {"synth-awi", "synth-mpi"}},
              {"train", {{"mlp", {{"epochs", 3}, {"hidden", 6}}}}},
              {"output_dir", out.string()}};
}

CliOptions write_config(const fs::path& dir, const json& doc) {
  atomic_write(dir / "config.json", doc.dump(2));
  CliOptions o;
  o.config_path = (dir / "config.json").string();
  return o;
}

int run(std::string_view cmd, const CliOptions& o, std::string* out = nullptr, std::string* err = nullptr) {
  std::ostringstream os, es;
  const int code = run_command(cmd, o, os, es);
  if (out) *out = os.str();
  if (err) *err = es.str();
  return code;
}

}  // namespace

TEST(Config, DefaultsAndEcho) {
  const ExperimentConfig c = parse_config(json::object());
  EXPECT_EQ(c.generation.n_lat, 24);
  EXPECT_EQ(c.generation.n_lon, 36);
  EXPECT_EQ(c.generation.oracles.size(), 5u);
  EXPECT_EQ(c.emulators.size(), 3u);
  EXPECT_EQ(c.protocols.size(), 3u);
  EXPECT_DOUBLE_EQ(c.report_threshold, 20.0);
  const ExperimentConfig again = parse_config(to_json(c));
  EXPECT_EQ(to_json(again).dump(), to_json(c).dump());
}

TEST(Config, UnknownKeyHasFieldPath) {
  try {
    parse_config(json{{"grid", {{"n_lat", 4}, {"nlon", 2}}}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "config.grid.nlon");
  }
}

TEST(Config, BaselineNeedsSsp245) {
  json doc = small_config("x");
  doc["scenarios"].erase(2);
  try {
    parse_config(doc);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "config.scenarios");
    EXPECT_NE(std::string(e.what()).find("ssp245"), std::string::npos);
  }
  doc["protocols"] = {"baseline"};
  EXPECT_THROW(parse_config(doc), ConfigError);
}

TEST(Config, OverridesOracleAndForcing) {
  json doc = small_config("x");
  doc["oracle_table"] = json::array({{{"id", "synth-awi"}, {"quadratic", 0.0}}, {{"id", "custom"}}});
  doc["oracles"] = {"synth-awi", "custom"};
  doc["forcing"] = {{"BC", {{"seasonal_amplitude", 0.0}}}};
  const ExperimentConfig c = parse_config(doc);
  EXPECT_EQ(c.generation.oracles[0].quadratic, 0.0);
  EXPECT_EQ(c.generation.oracles[1].id, "custom");
  EXPECT_EQ(c.generation.forcing.forcers[2].seasonal_amplitude, 0.0);
  EXPECT_THROW(parse_config(json{{"oracles", {"nope"}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"protocols", {"time_shift"}}}), ConfigError);
}

TEST(Config, ProtocolList) {
  EXPECT_EQ(parse_protocol_list("baseline, ssp_rotation").size(), 2u);
  EXPECT_THROW(parse_protocol_list("baseline,bogus"), ConfigError);
  EXPECT_THROW(parse_protocol_list("baseline,baseline"), ConfigError);
}

TEST(Harness, InvalidConfigExitsOne) {
  const auto dir = test_support::scratch_dir("h-badcfg");
  json doc = small_config(dir / "out");
  doc["scenarios"].erase(2);
  std::string err;
  EXPECT_EQ(run("generate", write_config(dir, doc), nullptr, &err), kExitConfig);
  EXPECT_NE(err.find("ssp245"), std::string::npos);
  CliOptions missing;
  missing.config_path = (dir / "absent.json").string();
  EXPECT_EQ(run("generate", missing), kExitIo);
}

TEST(Harness, GenerateIsIdempotent) {
  const auto dir = test_support::scratch_dir("h-gen");
  CliOptions o = write_config(dir, small_config(dir / "out"));
  ASSERT_EQ(run("generate", o), kExitOk);
  const auto first = json::parse(read_file(dir / "out" / "manifests" / "generate.json"));
  const std::string manifest = read_file(dir / "out" / "dataset" / "manifest.json");
  ASSERT_EQ(run("generate", o), kExitOk);
  const auto second = json::parse(read_file(dir / "out" / "manifests" / "generate.json"));
  EXPECT_EQ(first["stages"][0]["artifacts"], second["stages"][0]["artifacts"]);
  EXPECT_EQ(first["stages"][0]["artifacts"].size(), 1u + 2u * 5u * 2u);
  EXPECT_EQ(read_file(dir / "out" / "dataset" / "manifest.json"), manifest);
  EXPECT_EQ(first["harness_version"], std::string(kHarnessVersion));
}

TEST(Harness, ExperimentNeedsDataset) {
  const auto dir = test_support::scratch_dir("h-nodata");
  EXPECT_EQ(run("experiment", write_config(dir, small_config(dir / "out"))), kExitIo);
}

TEST(Harness, ExperimentProducesCompleteDeterministicResults) {
  const auto dir = test_support::scratch_dir("h-exp");
  CliOptions a = write_config(dir, small_config(dir / "a"));
  a.generate = true;
  ASSERT_EQ(run("experiment", a), kExitOk);
  CliOptions b = a;
  b.out_dir = (dir / "b").string();
  b.jobs = 3;
  ASSERT_EQ(run("experiment", b), kExitOk);
  for (const char* f : {"records.csv", "table.csv", "table.md", "worst_case.csv"}) {
    EXPECT_EQ(read_file(dir / "a" / "results" / f), read_file(dir / "b" / "results" / f)) << f;
  }
  const auto records = records_from_csv(read_file(dir / "a" / "results" / "records.csv"));
  EXPECT_EQ(records.size(), 3u * 2u * 5u * 2u);
  const auto slices = records_from_csv(read_file(dir / "a" / "results" / "time_shift_by_scenario.csv"));
  EXPECT_EQ(slices.size(), 3u * 2u * 4u * 2u);
  // The ssp245 slice is the headline time-shift number.
  for (const EvalRecord& s : slices) {
    if (s.protocol != "time_shift:ssp245") continue;
    const auto it = std::find_if(records.begin(), records.end(), [&](const EvalRecord& r) {
      return r.protocol == "time_shift" && r.emulator == s.emulator && r.oracle == s.oracle && r.variable == s.variable;
    });
    ASSERT_NE(it, records.end());
    EXPECT_EQ(it->rmse, s.rmse);
  }
  EXPECT_TRUE(fs::exists(dir / "a" / "models" / "mlp" / "synth-mpi" / "ssp_holdout_ssp370.json"));
  EXPECT_TRUE(fs::exists(dir / "a" / "splits" / "synth-awi" / "time_shift.json"));
  const auto manifest = json::parse(read_file(dir / "a" / "manifests" / "experiment.json"));
  for (const auto& stage : manifest["stages"]) {
    for (const auto& [rel, sum] : stage["artifacts"].items()) {
      EXPECT_EQ(checksum_hex(file_checksum(dir / "a" / rel)), sum.get<std::string>()) << rel;
    }
  }
}

TEST(Harness, StagedCommandsMatchExperiment) {
  const auto dir = test_support::scratch_dir("h-staged");
  json doc = small_config(dir / "staged");
  doc["emulators"] = {"climatology", "pattern_scaling"};
  CliOptions o = write_config(dir, doc);
  ASSERT_EQ(run("generate", o), kExitOk);
  ASSERT_EQ(run("split", o), kExitOk);
  ASSERT_EQ(run("train", o), kExitOk);
  ASSERT_EQ(run("eval", o), kExitOk);
  CliOptions e = o;
  e.out_dir = (dir / "oneshot").string();
  e.generate = true;
  ASSERT_EQ(run("experiment", e), kExitOk);
  EXPECT_EQ(read_file(dir / "staged" / "results" / "records.csv"), read_file(dir / "oneshot" / "results" / "records.csv"));
}

TEST(Harness, ProtocolOverrideLimitsPlans) {
  const auto dir = test_support::scratch_dir("h-proto");
  CliOptions o = write_config(dir, small_config(dir / "out"));
  o.generate = true;
  o.protocols = "baseline,time_shift";
  ASSERT_EQ(run("experiment", o), kExitOk);
  EXPECT_EQ(records_from_csv(read_file(dir / "out" / "results" / "records.csv")).size(), 3u * 2u * 2u * 2u);
}

TEST(Harness, DivergentCellIsRecordedAndSweepContinues) {
  const auto dir = test_support::scratch_dir("h-diverge");
  json doc = small_config(dir / "out");
  doc["train"]["mlp"] = {{"epochs", 5}, {"hidden", 4}, {"optimizer", "sgd"}, {"lr_init", 1e6}, {"decay_gamma", 1.0}};
  CliOptions o = write_config(dir, doc);
  o.generate = true;
  ASSERT_EQ(run("experiment", o), kExitPartial);
  const std::string failures = read_file(dir / "out" / "results" / "failures.csv");
  EXPECT_NE(failures.find("mlp,synth-awi,baseline,train"), std::string::npos);
  const auto failed = static_cast<std::size_t>(std::count(failures.begin(), failures.end(), '\n')) - 1;
  EXPECT_GE(failed, 1u);
  EXPECT_EQ(records_from_csv(read_file(dir / "out" / "results" / "records.csv")).size(), (3u * 2u * 5u - failed) * 2u);
  EXPECT_NE(read_file(dir / "out" / "results" / "table.md").find("FAILED"), std::string::npos);
  std::string out;
  CliOptions r;
  r.results_dir = (dir / "out" / "results").string();
  EXPECT_EQ(run("report", r, &out), kExitPartial);
  EXPECT_NE(out.find("FAILED"), std::string::npos);
}

TEST(Harness, ReportFlagsAndIsReproducible) {
  const auto dir = test_support::scratch_dir("h-report");
  std::vector<EvalRecord> recs{{"pattern_scaling", "synth-awi", "baseline", "TAS", 2.0, 12},
                               {"pattern_scaling", "synth-awi", "time_shift", "TAS", 2.5, 12}};
  atomic_write(dir / "records.csv", records_to_csv(recs));
  CliOptions o;
  o.results_dir = dir.string();
  std::string out;
  ASSERT_EQ(run("report", o, &out), kExitOk);
  EXPECT_NE(out.find("+25.00!"), std::string::npos);
  const std::string md = read_file(dir / "report.md");
  ASSERT_EQ(run("report", o), kExitOk);
  EXPECT_EQ(read_file(dir / "report.md"), md);
  o.threshold = 30.0;
  ASSERT_EQ(run("report", o, &out), kExitOk);
  EXPECT_EQ(out.find("+25.00!"), std::string::npos);
}

TEST(Harness, ReportOnBadRecordsExitsTwo) {
  const auto dir = test_support::scratch_dir("h-report-bad");
  CliOptions o;
  o.results_dir = dir.string();
  EXPECT_EQ(run("report", o), kExitIo);  // no records file
  atomic_write(dir / "records.csv", "");
  EXPECT_EQ(run("report", o), kExitIo);
  atomic_write(dir / "records.csv", "emulator,oracle,protocol,variable,rmse,n_forecasts\nx,y\n");
  EXPECT_EQ(run("report", o), kExitIo);
}

TEST(Harness, RepeatWritesPerSeedDirectories) {
  const auto dir = test_support::scratch_dir("h-repeat");
  json doc = small_config(dir / "out");
  doc["emulators"] = {"climatology"};
  doc["protocols"] = {"baseline"};
  CliOptions o = write_config(dir, doc);
  o.repeat = 2;
  ASSERT_EQ(run("experiment", o), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "out" / "seed-3" / "results" / "records.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "seed-4" / "results" / "records.csv"));
  EXPECT_NE(read_file(dir / "out" / "seed-3" / "results" / "records.csv"),
            read_file(dir / "out" / "seed-4" / "results" / "records.csv"));
}
