#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "climashift/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Out-of-distribution evaluation harness for climate emulators on synthetic data"};
  app.require_subcommand(1);

  climashift::CliOptions opts;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string protocols;
  double threshold = 0.0;
  std::string results_dir;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* cfg = sub->add_option("--config", opts.config_path, "experiment config (JSON)");
    if (config_required) cfg->required();
    sub->add_option("--out", out_dir, "output directory (overrides config.output_dir)");
    sub->add_option("--seed", seed, "experiment seed (overrides config.seed)");
  };
  auto add_run = [&](CLI::App* sub) {
    add_common(sub, true);
    sub->add_option("--jobs", opts.jobs, "parallel training cells")->check(CLI::PositiveNumber);
    sub->add_option("--protocols", protocols, "comma-separated subset of baseline,time_shift,ssp_rotation");
  };

  auto* generate = app.add_subcommand("generate", "build and write the synthetic dataset");
  add_run(generate);
  auto* split = app.add_subcommand("split", "write split plans for every oracle and protocol");
  add_run(split);
  auto* train = app.add_subcommand("train", "train every (emulator, oracle, plan) cell");
  add_run(train);
  auto* eval = app.add_subcommand("eval", "evaluate trained models and write results");
  add_run(eval);
  auto* experiment = app.add_subcommand("experiment", "generate (optional), split, train, evaluate");
  add_run(experiment);
  experiment->add_flag("--generate", opts.generate, "build the dataset before running");
  experiment->add_option("--repeat", opts.repeat, "run seeds seed..seed+N-1 into seed-<s>/ subdirectories")
      ->check(CLI::PositiveNumber);
  auto* report = app.add_subcommand("report", "print and write the percent-change table");
  add_common(report, false);
  report->add_option("results_dir", results_dir, "directory holding records.csv");
  report->add_option("--threshold", threshold, "flag cells above this percent change (default 20)");

  CLI11_PARSE(app, argc, argv);

  if (!out_dir.empty()) opts.out_dir = out_dir;
  if (!protocols.empty()) opts.protocols = protocols;
  if (!results_dir.empty()) opts.results_dir = results_dir;
  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed") > 0) opts.seed = seed;
    if (sub->get_option_no_throw("--threshold") != nullptr && sub->count("--threshold") > 0) opts.threshold = threshold;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return climashift::run_command(command, opts, std::cout, std::cerr);
}
