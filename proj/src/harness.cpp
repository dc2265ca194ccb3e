#include "climashift/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <ostream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "climashift/dataset_io.hpp"
#include "climashift/errors.hpp"
#include "climashift/file_util.hpp"
#include "climashift/rng.hpp"
#include "climashift/synth.hpp"

namespace climashift {

namespace fs = std::filesystem;
using nlohmann::json;

void configure_logging() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_color_mt("climashift");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
  });
  const char* env = std::getenv("CLIMASHIFT_LOG");
  const std::string level = env ? env : "info";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
    if (level != "info") spdlog::warn("CLIMASHIFT_LOG='{}' not recognised, using info", level);
  }
}

ExperimentConfig resolve_config(const CliOptions& options) {
  if (options.config_path.empty()) throw ConfigError("--config", "a config file is required");
  ExperimentConfig config = load_config(options.config_path);
  if (options.seed) config.seed = *options.seed;
  if (options.out_dir) config.output_dir = *options.out_dir;
  if (options.protocols) config.protocols = parse_protocol_list(*options.protocols);
  validate_experiment(config);
  return config;
}

std::uint64_t dataset_seed(std::uint64_t seed) { return derive_seed(seed, {"data"}); }

std::uint64_t train_seed(std::uint64_t seed, EmulatorKind kind, std::string_view oracle, std::string_view plan) {
  return derive_seed(seed, {"train", to_string(kind), oracle, plan});
}

std::vector<SplitPlan> make_plans(const ExperimentConfig& config, const DatasetLayout& layout,
                                  std::string_view oracle) {
  std::vector<SplitPlan> plans;
  for (Protocol p : config.protocols) {
    switch (p) {
      case Protocol::baseline:
        plans.push_back(baseline_split(layout, oracle, config.seed, config.split));
        break;
      case Protocol::time_shift:
        plans.push_back(time_domain_split(layout, oracle, config.time_shift_test_scenarios, config.seed, config.split));
        break;
      case Protocol::ssp_rotation:
        for (SplitPlan& plan : rotate_ssp_splits(layout, oracle, config.seed, config.split)) {
          plans.push_back(std::move(plan));
        }
        break;
    }
  }
  return plans;
}

CellOutcome evaluate_cell(const Emulator& model, const SplitPlan& plan, const Dataset& dataset) {
  CellOutcome out;
  const LatWeights weights = lat_weights(dataset.grid);
  const std::vector<ChunkView> test = dataset.chunks(plan.test);
  const VariableRisk risk = evaluate_chunks(model, test, weights);
  std::vector<Domain> domains;
  for (const std::string& scenario : plan.domains_all) {
    domains.push_back(Domain{scenario, dataset.scenario_chunks(plan.oracle, scenario)});
  }
  const std::string emulator(to_string(model.kind()));
  for (std::size_t v = 0; v < kNumOutputs; ++v) {
    out.records.push_back(
        EvalRecord{emulator, plan.oracle, plan.name, std::string(kOutputNames[v]), risk.rmse[v], risk.n_forecasts});
    const WorstCase wc = worst_case_risk(model, domains, weights, static_cast<OutputVar>(v));
    out.worst_case.push_back(
        WorstCaseRecord{emulator, plan.oracle, plan.name, std::string(kOutputNames[v]), wc.domain, wc.risk});
  }
  if (plan.name == kTimeShiftPlan && !plan.test.empty()) {
    const auto [lo, hi] = std::minmax_element(plan.test.begin(), plan.test.end(),
                                              [](const ChunkKey& a, const ChunkKey& b) { return a.year < b.year; });
    for (std::string_view ssp : kSspScenarios) {
      const ScenarioSpec* s = dataset.layout.find_scenario(ssp);
      if (s == nullptr || !s->covers(lo->year) || !s->covers(hi->year)) continue;
      std::vector<ChunkKey> keys;
      for (int y = lo->year; y <= hi->year; ++y) keys.push_back(ChunkKey{plan.oracle, std::string(ssp), y});
      const VariableRisk slice = evaluate_chunks(model, dataset.chunks(keys), weights);
      for (std::size_t v = 0; v < kNumOutputs; ++v) {
        out.time_slices.push_back(EvalRecord{emulator, plan.oracle, plan.name + ":" + std::string(ssp),
                                             std::string(kOutputNames[v]), slice.rmse[v], slice.n_forecasts});
      }
    }
  }
  return out;
}

namespace {

std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += (ch == '\n' || ch == '\r') ? ' ' : ch;
  }
  return out + "\"";
}

}  // namespace

std::string worst_case_to_csv(std::span<const WorstCaseRecord> rows) {
  std::string out = "emulator,oracle,protocol,variable,worst_domain,worst_risk\n";
  for (const WorstCaseRecord& r : rows) {
    out += fmt::format("{},{},{},{},{},{:.17g}\n", r.emulator, r.oracle, r.protocol, r.variable, r.domain, r.risk);
  }
  return out;
}

std::string failures_to_csv(std::span<const CellFailure> rows) {
  std::string out = "emulator,oracle,protocol,stage,error\n";
  for (const CellFailure& f : rows) {
    out += fmt::format("{},{},{},{},{}\n", f.emulator, f.oracle, f.protocol, f.stage, csv_escape(f.message));
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Paths {
  fs::path root;
  fs::path dataset() const { return root / "dataset"; }
  fs::path split(std::string_view oracle, std::string_view plan) const {
    return root / "splits" / std::string(oracle) / (std::string(plan) + ".json");
  }
  fs::path model(EmulatorKind kind, std::string_view oracle, std::string_view plan) const {
    return root / "models" / std::string(to_string(kind)) / std::string(oracle) / (std::string(plan) + ".json");
  }
  fs::path results() const { return root / "results"; }
  fs::path manifest(std::string_view command) const { return root / "manifests" / (std::string(command) + ".json"); }
};

/// Accumulates stage timings and artifact checksums for a RunManifest.
class RunRecorder {
 public:
  RunRecorder(std::string command, const ExperimentConfig& config, fs::path root)
      : command_(std::move(command)), config_(to_json(config)), root_(std::move(root)) {}

  void begin(std::string name) {
    stages_.push_back(json{{"name", std::move(name)}, {"artifacts", json::object()}});
    started_ = Clock::now();
  }

  void end() {
    stages_.back()["seconds"] = std::chrono::duration<double>(Clock::now() - started_).count();
  }

  void artifact(const fs::path& path) {
    const std::string rel = fs::relative(path, root_).generic_string();
    stages_.back()["artifacts"][rel] = checksum_hex(file_checksum(path));
  }

  void write(const fs::path& path) const {
    const json doc{{"format", "climashift-run-manifest"},
                   {"harness_version", kHarnessVersion},
                   {"command", command_},
                   {"config", config_},
                   {"stages", stages_}};
    atomic_write(path, doc.dump(2) + "\n");
  }

 private:
  std::string command_;
  json config_;
  fs::path root_;
  json stages_ = json::array();
  Clock::time_point started_;
};

void write_text(RunRecorder& rec, const fs::path& path, std::string_view text) {
  atomic_write(path, text);
  rec.artifact(path);
}

void write_json(RunRecorder& rec, const fs::path& path, const json& doc) { write_text(rec, path, doc.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IntegrityError(path.string(), std::string("not valid JSON: ") + e.what());
  }
}

/// The on-disk dataset must hold every oracle and scenario the config asks for.
void check_dataset_matches(const Dataset& ds, const ExperimentConfig& config, const fs::path& dir) {
  if (static_cast<long>(ds.grid.n_lat) != config.generation.n_lat ||
      static_cast<long>(ds.grid.n_lon) != config.generation.n_lon) {
    throw ConfigError("config.grid", fmt::format("dataset at {} is {}x{} (n_lon x n_lat), config asks for {}x{}",
                                                 dir.string(), ds.grid.n_lon, ds.grid.n_lat, config.generation.n_lon,
                                                 config.generation.n_lat));
  }
  for (const OracleSpec& o : config.generation.oracles) {
    if (!ds.layout.has_oracle(o.id)) {
      throw ConfigError("config.oracles", "dataset at " + dir.string() + " has no oracle '" + o.id + "'");
    }
  }
  for (const ScenarioSpec& s : config.generation.scenarios) {
    const ScenarioSpec* found = ds.layout.find_scenario(s.id);
    if (found == nullptr || !(*found == s)) {
      throw ConfigError("config.scenarios", "dataset at " + dir.string() + " does not match scenario '" + s.id + "'");
    }
  }
}

Dataset generate_into(const ExperimentConfig& config, const Paths& paths, RunRecorder& rec) {
  rec.begin("generate");
  spdlog::info("generating {} oracles x {} scenarios on a {}x{} grid", config.generation.oracles.size(),
               config.generation.scenarios.size(), config.generation.n_lon, config.generation.n_lat);
  Dataset ds = build_dataset(config.generation, dataset_seed(config.seed));
  const DatasetManifest manifest = write_dataset(ds, paths.dataset(), config.dtype);
  rec.artifact(paths.dataset() / "manifest.json");
  for (const auto& [rel, sum] : manifest.checksums) rec.artifact(paths.dataset() / rel);
  rec.end();
  if (config.dtype == DType::f32) {
    // Train on exactly the bytes a later run will read back.
    ds = read_dataset(paths.dataset());
  }
  return ds;
}

Dataset load_dataset(const ExperimentConfig& config, const Paths& paths, RunRecorder& rec) {
  rec.begin("load_dataset");
  if (!fs::exists(paths.dataset() / "manifest.json")) {
    throw IoError(paths.dataset().string(), "no dataset found; run 'generate' first or pass --generate");
  }
  Dataset ds = read_dataset(paths.dataset());
  check_dataset_matches(ds, config, paths.dataset());
  rec.end();
  return ds;
}

std::vector<std::string> oracle_ids(const ExperimentConfig& config) {
  std::vector<std::string> ids;
  for (const OracleSpec& o : config.generation.oracles) ids.push_back(o.id);
  return ids;
}

std::vector<SplitPlan> build_and_write_plans(const ExperimentConfig& config, const Dataset& ds, const Paths& paths,
                                             RunRecorder& rec) {
  rec.begin("split");
  std::vector<SplitPlan> plans;
  for (const std::string& oracle : oracle_ids(config)) {
    for (SplitPlan& plan : make_plans(config, ds.layout, oracle)) {
      const auto violations = verify_split(plan, ds.layout);
      if (!violations.empty()) {
        throw ContractError("plan " + plan.name + " for " + oracle + " is invalid: " + violations.front().message);
      }
      write_json(rec, paths.split(oracle, plan.name), to_json(plan));
      plans.push_back(std::move(plan));
    }
  }
  rec.end();
  return plans;
}

/// Expected plan names come from the config; the plans themselves from disk.
std::vector<SplitPlan> read_plans(const ExperimentConfig& config, const Dataset& ds, const Paths& paths) {
  std::vector<SplitPlan> plans;
  for (const std::string& oracle : oracle_ids(config)) {
    for (const SplitPlan& expected : make_plans(config, ds.layout, oracle)) {
      const fs::path path = paths.split(oracle, expected.name);
      if (!fs::exists(path)) throw IoError(path.string(), "split plan missing; run 'split' first");
      SplitPlan plan;
      try {
        plan = split_from_json(read_json(path));
      } catch (const IoError&) {
        throw;
      } catch (const std::exception& e) {
        throw IntegrityError(path.string(), e.what());
      }
      if (plan.name != expected.name || plan.oracle != oracle) {
        throw IntegrityError(path.string(), "plan name or oracle does not match its path");
      }
      plans.push_back(std::move(plan));
    }
  }
  return plans;
}

struct Cell {
  EmulatorKind kind;
  const SplitPlan* plan;
};

std::vector<Cell> make_cells(const ExperimentConfig& config, const std::vector<SplitPlan>& plans) {
  std::vector<Cell> cells;
  for (EmulatorKind kind : config.emulators) {
    for (const SplitPlan& plan : plans) cells.push_back(Cell{kind, &plan});
  }
  return cells;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Each index is handled
/// by exactly one thread; fn must not throw.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (std::thread& t : threads) t.join();
}

struct TrainedCell {
  std::unique_ptr<Emulator> model;
  json document;
  std::optional<CellFailure> failure;
};

TrainedCell train_cell(const ExperimentConfig& config, const Cell& cell, const Dataset& ds) {
  TrainedCell out;
  const SplitPlan& plan = *cell.plan;
  TrainConfig tc = config.train.at(cell.kind);
  tc.seed = train_seed(config.seed, cell.kind, plan.oracle, plan.name);
  const auto started = Clock::now();
  try {
    TrainResult result = train(cell.kind, plan, ds, tc);
    out.document = model_to_json(*result.model, tc, plan.name, plan.oracle, result.history, result.best_epoch);
    out.model = std::move(result.model);
    spdlog::debug("trained {} / {} / {} in {:.2f}s", to_string(cell.kind), plan.oracle, plan.name,
                  std::chrono::duration<double>(Clock::now() - started).count());
  } catch (const DivergenceError& e) {
    out.failure = CellFailure{std::string(to_string(cell.kind)), plan.oracle, plan.name, "train",
                              fmt::format("diverged at epoch {}: {}", e.epoch(), e.what())};
  } catch (const std::exception& e) {
    out.failure = CellFailure{std::string(to_string(cell.kind)), plan.oracle, plan.name, "train", e.what()};
  }
  if (out.failure) {
    spdlog::error("{} / {} / {}: {}", out.failure->emulator, out.failure->oracle, out.failure->protocol,
                  out.failure->message);
  }
  return out;
}

CellOutcome eval_cell(const Emulator& model, const Cell& cell, const Dataset& ds) {
  try {
    return evaluate_cell(model, *cell.plan, ds);
  } catch (const std::exception& e) {
    CellOutcome out;
    out.failure = CellFailure{std::string(to_string(cell.kind)), cell.plan->oracle, cell.plan->name, "eval", e.what()};
    spdlog::error("{} / {} / {}: {}", out.failure->emulator, out.failure->oracle, out.failure->protocol, e.what());
    return out;
  }
}

/// Writes records, tables, worst-case risks and failures; returns the exit code.
int write_results(const ExperimentConfig& config, const Paths& paths, RunRecorder& rec,
                  std::vector<CellOutcome>& outcomes, std::vector<CellFailure> failures) {
  rec.begin("report");
  std::vector<EvalRecord> records;
  std::vector<WorstCaseRecord> worst;
  std::vector<EvalRecord> slices;
  for (CellOutcome& o : outcomes) {
    records.insert(records.end(), o.records.begin(), o.records.end());
    slices.insert(slices.end(), o.time_slices.begin(), o.time_slices.end());
    worst.insert(worst.end(), o.worst_case.begin(), o.worst_case.end());
    if (o.failure) failures.push_back(*o.failure);
  }
  sort_records(records);
  const fs::path dir = paths.results();
  write_text(rec, dir / "records.csv", records_to_csv(records));
  write_text(rec, dir / "worst_case.csv", worst_case_to_csv(worst));
  sort_records(slices);
  write_text(rec, dir / "time_shift_by_scenario.csv", records_to_csv(slices));
  write_text(rec, dir / "failures.csv", failures_to_csv(failures));
  const int code = failures.empty() ? kExitOk : kExitPartial;
  if (!records.empty()) {
    const ResultsTable table = build_results_table(records, !failures.empty());
    write_text(rec, dir / "table.csv", table_to_csv(table));
    write_text(rec, dir / "table.md", table_to_markdown(table, config.report_threshold));
  } else {
    std::error_code ec;
    fs::remove(dir / "table.csv", ec);
    fs::remove(dir / "table.md", ec);
  }
  rec.end();
  if (!failures.empty()) spdlog::warn("{} cell(s) failed; see {}", failures.size(), (dir / "failures.csv").string());
  return code;
}

int do_generate(const ExperimentConfig& config) {
  const Paths paths{config.output_dir};
  RunRecorder rec("generate", config, paths.root);
  generate_into(config, paths, rec);
  rec.write(paths.manifest("generate"));
  spdlog::info("dataset written to {}", paths.dataset().string());
  return kExitOk;
}

int do_split(const ExperimentConfig& config) {
  const Paths paths{config.output_dir};
  RunRecorder rec("split", config, paths.root);
  const Dataset ds = load_dataset(config, paths, rec);
  const auto plans = build_and_write_plans(config, ds, paths, rec);
  rec.write(paths.manifest("split"));
  spdlog::info("{} split plans written", plans.size());
  return kExitOk;
}

int do_train(const ExperimentConfig& config, int jobs) {
  const Paths paths{config.output_dir};
  RunRecorder rec("train", config, paths.root);
  const Dataset ds = load_dataset(config, paths, rec);
  const auto plans = read_plans(config, ds, paths);
  const auto cells = make_cells(config, plans);
  rec.begin("train");
  std::vector<TrainedCell> trained(cells.size());
  parallel_for(cells.size(), jobs, [&](std::size_t i) { trained[i] = train_cell(config, cells[i], ds); });
  std::vector<CellFailure> failures;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const fs::path path = paths.model(cells[i].kind, cells[i].plan->oracle, cells[i].plan->name);
    if (trained[i].failure) {
      failures.push_back(*trained[i].failure);
      std::error_code ec;
      fs::remove(path, ec);  // a stale model must not stand in for a failed cell
    } else {
      write_json(rec, path, trained[i].document);
    }
  }
  write_text(rec, paths.root / "models" / "failures.csv", failures_to_csv(failures));
  rec.end();
  rec.write(paths.manifest("train"));
  return failures.empty() ? kExitOk : kExitPartial;
}

int do_eval(const ExperimentConfig& config, int jobs) {
  const Paths paths{config.output_dir};
  RunRecorder rec("eval", config, paths.root);
  const Dataset ds = load_dataset(config, paths, rec);
  const auto plans = read_plans(config, ds, paths);
  const auto cells = make_cells(config, plans);
  rec.begin("eval");
  std::vector<CellOutcome> outcomes(cells.size());
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    const Cell& cell = cells[i];
    const fs::path path = paths.model(cell.kind, cell.plan->oracle, cell.plan->name);
    if (!fs::exists(path)) {
      outcomes[i].failure = CellFailure{std::string(to_string(cell.kind)), cell.plan->oracle, cell.plan->name,
                                        "eval", "no trained model at " + path.string()};
      return;
    }
    try {
      const ModelDocument doc = model_from_json(read_json(path));
      if (doc.model->kind() != cell.kind || doc.plan != cell.plan->name || doc.oracle != cell.plan->oracle) {
        throw IntegrityError(path.string(), "model document does not match its path");
      }
      outcomes[i] = eval_cell(*doc.model, cell, ds);
    } catch (const std::exception& e) {
      outcomes[i].failure = CellFailure{std::string(to_string(cell.kind)), cell.plan->oracle, cell.plan->name,
                                        "eval", e.what()};
    }
  });
  rec.end();
  const int code = write_results(config, paths, rec, outcomes, {});
  rec.write(paths.manifest("eval"));
  return code;
}

int do_experiment(const ExperimentConfig& config, bool generate, int jobs) {
  const Paths paths{config.output_dir};
  RunRecorder rec("experiment", config, paths.root);
  const Dataset ds = generate ? generate_into(config, paths, rec) : load_dataset(config, paths, rec);
  const auto plans = build_and_write_plans(config, ds, paths, rec);
  const auto cells = make_cells(config, plans);
  spdlog::info("running {} cells on {} job(s)", cells.size(), std::max(1, jobs));

  rec.begin("train_eval");
  std::vector<TrainedCell> trained(cells.size());
  std::vector<CellOutcome> outcomes(cells.size());
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    trained[i] = train_cell(config, cells[i], ds);
    if (trained[i].model) outcomes[i] = eval_cell(*trained[i].model, cells[i], ds);
    trained[i].model.reset();
  });
  std::vector<CellFailure> failures;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const fs::path path = paths.model(cells[i].kind, cells[i].plan->oracle, cells[i].plan->name);
    if (trained[i].failure) {
      failures.push_back(*trained[i].failure);
      std::error_code ec;
      fs::remove(path, ec);
    } else {
      write_json(rec, path, trained[i].document);
    }
  }
  rec.end();
  const int code = write_results(config, paths, rec, outcomes, std::move(failures));
  rec.write(paths.manifest("experiment"));
  spdlog::info("results written to {}", paths.results().string());
  return code;
}

int do_report(const CliOptions& options, std::ostream& out) {
  double threshold = 20.0;
  fs::path dir;
  std::optional<ExperimentConfig> config;
  if (!options.config_path.empty()) config = resolve_config(options);
  if (config) threshold = config->report_threshold;
  if (options.threshold) threshold = *options.threshold;
  if (!std::isfinite(threshold)) throw ConfigError("--threshold", "must be finite");
  if (options.results_dir) {
    dir = *options.results_dir;
  } else if (options.out_dir) {
    dir = fs::path(*options.out_dir) / "results";
  } else if (config) {
    dir = fs::path(config->output_dir) / "results";
  } else {
    throw ConfigError("results_dir", "pass a results directory, --out or --config");
  }

  const fs::path records_path = dir / "records.csv";
  std::vector<EvalRecord> records;
  try {
    records = records_from_csv(read_file(records_path));
  } catch (const InvalidArgument& e) {
    throw IntegrityError(records_path.string(), e.what());
  }
  std::vector<std::string> failure_lines;
  if (fs::exists(dir / "failures.csv")) {
    const std::string text = read_file(dir / "failures.csv");
    std::size_t start = text.find('\n');
    while (start != std::string::npos && start + 1 < text.size()) {
      const std::size_t end = text.find('\n', start + 1);
      failure_lines.push_back(text.substr(start + 1, end == std::string::npos ? std::string::npos : end - start - 1));
      start = end;
    }
  }
  ResultsTable table;
  try {
    table = build_results_table(records, !failure_lines.empty());
  } catch (const CompletenessError& e) {
    throw IntegrityError(records_path.string(), e.what());
  }

  std::string md = table_to_markdown(table, threshold);
  if (!failure_lines.empty()) {
    md += "\n## Failed cells\n\n";
    for (const std::string& line : failure_lines) md += "- " + line + "\n";
  }
  atomic_write(dir / "report.md", md);

  out << table_to_text(table, threshold);
  std::size_t flagged = 0;
  for (const auto& v : table.cells) flagged += (v && *v > threshold) ? 1 : 0;
  out << fmt::format("{} of {} cells flagged; {} failed cell(s)\n", flagged, table.cells.size(), failure_lines.size());
  return failure_lines.empty() ? kExitOk : kExitPartial;
}

}  // namespace

int run_command(std::string_view command, const CliOptions& options, std::ostream& out, std::ostream& err) {
  configure_logging();
  try {
    if (options.jobs < 1) throw ConfigError("--jobs", "must be >= 1");
    if (options.repeat < 1) throw ConfigError("--repeat", "must be >= 1");
    if (command == "report") return do_report(options, out);

    const ExperimentConfig config = resolve_config(options);
    if (command == "generate") return do_generate(config);
    if (command == "split") return do_split(config);
    if (command == "train") return do_train(config, options.jobs);
    if (command == "eval") return do_eval(config, options.jobs);
    if (command == "experiment") {
      if (options.repeat == 1) return do_experiment(config, options.generate, options.jobs);
      int worst = kExitOk;
      for (int r = 0; r < options.repeat; ++r) {
        ExperimentConfig run = config;
        run.seed = config.seed + static_cast<std::uint64_t>(r);
        run.output_dir = (fs::path(config.output_dir) / fmt::format("seed-{}", run.seed)).string();
        spdlog::info("repeat {}/{}: seed {}", r + 1, options.repeat, run.seed);
        // Each seed gets its own dataset, so generation is implied.
        worst = std::max(worst, do_experiment(run, true, options.jobs));
      }
      return worst;
    }
    throw ConfigError("command", "unknown command '" + std::string(command) + "'");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace climashift
