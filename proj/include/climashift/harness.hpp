#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "climashift/config.hpp"
#include "climashift/dataset.hpp"
#include "climashift/metrics.hpp"
#include "climashift/split.hpp"

namespace climashift {

inline constexpr std::string_view kHarnessVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitIo = 2, kExitPartial = 3 };

struct CliOptions {
  std::string config_path;
  std::optional<std::string> out_dir;  // overrides config.output_dir
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> protocols;  // csv list
  bool generate = false;                 // experiment: (re)build the dataset first
  int repeat = 1;                        // experiment: seeds seed, seed+1, ... in seed-<s>/ subdirectories
  std::optional<double> threshold;       // report
  std::optional<std::string> results_dir;  // report
};

/// Loads the config file and applies command-line overrides.
ExperimentConfig resolve_config(const CliOptions& options);

/// Reads CLIMASHIFT_LOG (error, info, debug; default info).
void configure_logging();

/// Seed used to build the dataset for an experiment seed.
std::uint64_t dataset_seed(std::uint64_t seed);
/// Seed for one training cell.
std::uint64_t train_seed(std::uint64_t seed, EmulatorKind kind, std::string_view oracle, std::string_view plan);

/// Plans the selected protocols call for, in protocol order.
std::vector<SplitPlan> make_plans(const ExperimentConfig& config, const DatasetLayout& layout,
                                  std::string_view oracle);

struct WorstCaseRecord {
  std::string emulator;
  std::string oracle;
  std::string protocol;
  std::string variable;
  std::string domain;
  double risk = 0.0;
};

struct CellFailure {
  std::string emulator;
  std::string oracle;
  std::string protocol;
  std::string stage;  // "train" or "eval"
  std::string message;
};

struct CellOutcome {
  std::vector<EvalRecord> records;
  std::vector<WorstCaseRecord> worst_case;
  std::vector<EvalRecord> time_slices;  // time-shift plan only, protocol "time_shift:<scenario>"
  std::optional<CellFailure> failure;
};

/// Test-set records plus worst-case risk over the plan's scenario domains.
/// For the time-shift plan, the test window of every SSP in the dataset is
/// also scored on its own.
CellOutcome evaluate_cell(const Emulator& model, const SplitPlan& plan, const Dataset& dataset);

std::string worst_case_to_csv(std::span<const WorstCaseRecord> rows);
std::string failures_to_csv(std::span<const CellFailure> rows);

/// Runs one subcommand and maps errors onto exit codes:
/// 0 ok, 1 config, 2 I/O or integrity, 3 partial experiment failure.
/// Diagnostics go to `err`, the report table to `out`.
int run_command(std::string_view command, const CliOptions& options, std::ostream& out, std::ostream& err);

}  // namespace climashift
