// Acceptance checks for the harness. Prints one PASS/FAIL line per criterion
// and exits non-zero if any criterion fails.
//
// usage: acceptance <acceptance-config.json> <work-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "climashift/config.hpp"
#include "climashift/dataset_io.hpp"
#include "climashift/emulators.hpp"
#include "climashift/errors.hpp"
#include "climashift/file_util.hpp"
#include "climashift/harness.hpp"
#include "climashift/metrics.hpp"
#include "climashift/mlp.hpp"
#include "climashift/split.hpp"
#include "climashift/synth.hpp"

using namespace climashift;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// Reference weights from the cell-centre formula, independent of the library.
std::vector<double> naive_weights(std::size_t n_lat) {
  std::vector<double> w(n_lat);
  double sum = 0.0;
  for (std::size_t i = 0; i < n_lat; ++i) {
    const double lat = -90.0 + (static_cast<double>(i) + 0.5) * 180.0 / static_cast<double>(n_lat);
    w[i] = std::cos(lat * std::numbers::pi / 180.0);
    sum += w[i];
  }
  for (double& v : w) v *= static_cast<double>(n_lat) / sum;
  return w;
}

Outcome metric_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> val(-5.0, 5.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n_lat = 1 + gen() % 6, n_lon = 1 + gen() % 6, n_fc = 1 + gen() % 4;
    const GridSpec g = build_grid(static_cast<long>(n_lat), static_cast<long>(n_lon));
    std::vector<double> pred(n_fc * g.cells()), truth(n_fc * g.cells());
    for (double& v : pred) v = val(gen);
    for (double& v : truth) v = val(gen);
    const auto w = naive_weights(n_lat);
    double mse = 0.0, rmse = 0.0;
    for (std::size_t f = 0; f < n_fc; ++f) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n_lat; ++i) {
        for (std::size_t j = 0; j < n_lon; ++j) {
          const double d = pred[(f * n_lat + i) * n_lon + j] - truth[(f * n_lat + i) * n_lon + j];
          acc += w[i] * d * d;
        }
      }
      acc /= static_cast<double>(n_lat * n_lon);
      mse += acc / static_cast<double>(n_fc);
      rmse += std::sqrt(acc) / static_cast<double>(n_fc);
    }
    const LatWeights lw = lat_weights(g);
    worst = std::max({worst, rel_err(weighted_mse(pred, truth, g, lw), mse),
                      rel_err(weighted_rmse(pred, truth, g, lw), rmse)});
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 1.0, fmt::format("max rel err {:.3e} (<= 1e-12), {:.3f}s (< 1s)", worst, secs)};
}

Outcome weight_law() {
  double worst = 0.0;
  for (long n = 1; n <= 64; ++n) {
    const LatWeights w = lat_weights(build_grid(n, 1));
    double sum = 0.0;
    for (double v : w.w) sum += v;
    worst = std::max(worst, std::abs(sum / static_cast<double>(n) - 1.0));
  }
  const LatWeights two = lat_weights(std::vector<double>{0.0, 60.0});
  const double e0 = std::abs(two.w[0] - 4.0 / 3.0), e1 = std::abs(two.w[1] - 2.0 / 3.0);
  return {worst <= 1e-12 && e0 <= 1e-12 && e1 <= 1e-12,
          fmt::format("max |mean(w) - 1| {:.3e}; {{0, 60}} -> {{{:.15f}, {:.15f}}}", worst, two.w[0], two.w[1])};
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  const GridSpec g = build_grid(3, 4);  // 4 x 3 (lon x lat)
  const LatWeights w = lat_weights(g);
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> in_d(0.0, 2.0), out_d(-3.0, 3.0);
  std::normal_distribution<double> par(0.0, 0.3);
  const int draws = 20;
  double worst = 0.0;
  for (int draw = 0; draw < draws; ++draw) {
    std::vector<std::vector<double>> ins(2), outs(2);
    std::vector<ChunkView> batch;
    for (int c = 0; c < 2; ++c) {
      ins[c].resize(12 * kNumForcers * g.cells());
      outs[c].resize(12 * kNumOutputs * g.cells());
      for (double& v : ins[c]) v = in_d(gen);
      for (double& v : outs[c]) v = out_d(gen);
    }
    for (int c = 0; c < 2; ++c) batch.push_back(ChunkView{ChunkKey{"o", "s", c}, ins[c], outs[c]});
    MlpParams p = init_mlp(batch, g, 5, static_cast<std::uint64_t>(draw));
    std::vector<double>* blocks[] = {&p.w1, &p.b1, &p.w2, &p.b2};
    for (auto* b : blocks) {
      for (double& v : *b) v = par(gen);
    }
    const LossAndGradient lg = loss_and_gradient(p, batch, g, w);
    const std::vector<double>* grads[] = {&lg.gradient.w1, &lg.gradient.b1, &lg.gradient.w2, &lg.gradient.b2};
    const double h = 1e-5;
    for (int b = 0; b < 4; ++b) {
      for (std::size_t i = 0; i < blocks[b]->size(); ++i) {
        const double keep = (*blocks[b])[i];
        (*blocks[b])[i] = keep + h;
        const double up = mlp_loss(p, batch, g, w);
        (*blocks[b])[i] = keep - h;
        const double down = mlp_loss(p, batch, g, w);
        (*blocks[b])[i] = keep;
        const double numeric = (up - down) / (2.0 * h);
        const double analytic = (*grads[b])[i];
        worst = std::max(worst, std::abs(analytic - numeric) /
                                    std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 10.0,
          fmt::format("{} draws, max rel err {:.3e} (< 1e-4), {:.2f}s (< 10s)", draws, worst, secs)};
}

// Noiseless linear oracle on the 12 x 8 grid with the full year ranges.
Outcome planted_recovery() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.generation.n_lat = 8;
  cfg.generation.n_lon = 12;
  OracleSpec spec = default_oracle_table()[0];
  spec.id = "planted-linear";
  spec.noise_sigma = 0.0;
  spec.quadratic = 0.0;
  cfg.generation.oracles = {spec};
  const Dataset ds = build_dataset(cfg.generation, 1);
  const GridSpec& g = ds.grid;
  const LatWeights w = lat_weights(g);

  // Sensitivity of the local response to the global-mean forcing.
  std::vector<std::array<double, kNumForcers>> planted(g.cells());
  for (std::size_t gi = 0; gi < kNumForcers; ++gi) {
    const Field pattern = render_pattern(cfg.generation.forcing.forcers[gi].pattern, g);
    for (std::size_t i = 0; i < g.n_lat; ++i) {
      const double s = std::sin(g.lat_deg[i] * std::numbers::pi / 180.0);
      for (std::size_t j = 0; j < g.n_lon; ++j) {
        const std::size_t c = i * g.n_lon + j;
        planted[c][gi] = spec.sensitivity[gi] * (1.0 + spec.polar_amplification * s * s) * pattern.values[c];
      }
    }
  }

  double worst_coef = 0.0, worst_rmse = 0.0;
  std::size_t n_plans = 0;
  for (const SplitPlan& plan : make_plans(cfg, ds.layout, spec.id)) {
    TrainConfig tc;
    const TrainResult r = train(EmulatorKind::pattern_scaling, plan, ds, tc);
    const auto& ps = dynamic_cast<const PatternScalingEmulator&>(*r.model);
    for (std::size_t c = 0; c < g.cells(); ++c) {
      for (std::size_t gi = 0; gi < kNumForcers; ++gi) {
        worst_coef = std::max(worst_coef, rel_err(ps.coefficient(OutputVar::TAS, c, 1 + gi), planted[c][gi]));
      }
    }
    const VariableRisk risk = evaluate_chunks(*r.model, ds.chunks(plan.test), w);
    worst_rmse = std::max({worst_rmse, risk.rmse[0], risk.rmse[1]});
    ++n_plans;
  }
  const double secs = seconds_since(t0);
  return {worst_coef <= 1e-6 && worst_rmse < 1e-6 && secs < 30.0 && n_plans == 5,
          fmt::format("{} plans, max coefficient rel err {:.3e} (<= 1e-6), max test RMSE {:.3e} (< 1e-6), {:.2f}s",
                      n_plans, worst_coef, worst_rmse, secs)};
}

// Quadratic term and noise on: pattern scaling must degrade when ssp585 is
// held out, and climatology must trail pattern scaling under the time shift.
Outcome shift_direction() {
  ExperimentConfig cfg;
  cfg.generation.n_lat = 8;
  cfg.generation.n_lon = 12;
  std::size_t checks = 0, held = 0;
  double min_pct = 1e300, min_gap = 1e300;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    cfg.seed = seed;
    const Dataset ds = build_dataset(cfg.generation, dataset_seed(seed));
    const LatWeights w = lat_weights(ds.grid);
    for (const OracleSpec& o : cfg.generation.oracles) {
      if (!(o.quadratic > 0.0) || !(o.noise_sigma > 0.0)) return {false, "oracle table lacks q > 0 with noise"};
      const SplitPlan base = baseline_split(ds.layout, o.id, seed, cfg.split);
      const SplitPlan time = time_domain_split(ds.layout, o.id, cfg.time_shift_test_scenarios, seed, cfg.split);
      const SplitPlan hold585 = rotate_ssp_splits(ds.layout, o.id, seed, cfg.split)[2];
      auto tas_rmse = [&](EmulatorKind kind, const SplitPlan& plan) {
        const TrainResult r = train(kind, plan, ds, TrainConfig{});
        return evaluate_chunks(*r.model, ds.chunks(plan.test), w).rmse[0];
      };
      const double pct = percent_change(tas_rmse(EmulatorKind::pattern_scaling, base),
                                        tas_rmse(EmulatorKind::pattern_scaling, hold585));
      const double gap = tas_rmse(EmulatorKind::climatology, time) - tas_rmse(EmulatorKind::pattern_scaling, time);
      min_pct = std::min(min_pct, pct);
      min_gap = std::min(min_gap, gap);
      checks += 2;
      held += (pct > 0.0) + (gap > 0.0);
    }
  }
  return {held == checks,
          fmt::format("{}/{} directions hold over 3 seeds x 5 oracles (TAS); min pattern-scaling ssp585 change "
                      "{:+.2f}%, min climatology-minus-pattern-scaling time-shift RMSE {:+.4f}",
                      held, checks, min_pct, min_gap)};
}

Outcome split_laws() {
  DatasetLayout layout;
  layout.oracles = {"synth-awi"};
  layout.scenarios = default_scenarios();
  std::mt19937_64 gen(5);
  std::size_t bad = 0;
  for (int i = 0; i < 50; ++i) {
    const std::uint64_t seed = gen();
    const SplitPlan b = baseline_split(layout, "synth-awi", seed);
    const SplitPlan t = time_domain_split(layout, "synth-awi", {"ssp245"}, seed);
    const auto rot = rotate_ssp_splits(layout, "synth-awi", seed);
    bad += !verify_split(b, layout).empty() + !verify_split(t, layout).empty();
    for (const SplitPlan& r : rot) bad += !verify_split(r, layout).empty();
    bad += b.train.size() != 381 || b.val.size() != 42 || b.train.size() + b.val.size() != 423;
    bad += rot.size() != 3 || rot[0].train.size() != rot[1].train.size() || rot[1].train.size() != rot[2].train.size();
  }
  return {bad == 0, fmt::format("50 seeds, {} violations; baseline 381 train / 42 val / 423 pool", bad)};
}

Outcome schedule_anchors() {
  TrainConfig plain;
  TrainConfig warm;
  warm.warmup_epochs = 5;
  const double a = lr_schedule(warm, 0), b = lr_schedule(warm, 5), c = lr_schedule(plain, 0);
  return {a == 1e-8 && b == 5e-4 && c == 2e-4,
          fmt::format("warm-up epoch 0 = {:g}, epoch 5 = {:g}; no warm-up epoch 0 = {:g}", a, b, c)};
}

Outcome compare_files(const fs::path& a, const fs::path& b, const std::vector<std::string>& names) {
  for (const std::string& n : names) {
    if (!fs::exists(a / n) || !fs::exists(b / n)) return {false, "missing " + n};
    if (read_file(a / n) != read_file(b / n)) return {false, n + " differs"};
  }
  return {true, ""};
}

Outcome round_trip() {
  const auto t0 = Clock::now();
  const GenerationConfig gen;  // default desk dataset, 36 x 24
  const Dataset ds = build_dataset(gen, dataset_seed(42));
  const fs::path root = fs::temp_directory_path() / "climashift-acceptance-roundtrip";
  std::vector<std::string> notes;
  bool ok = true;
  for (DType dtype : {DType::f64, DType::f32}) {
    const std::string name = dtype == DType::f64 ? "f64" : "f32";
    const fs::path dir = root / name;
    fs::remove_all(dir);
    const DatasetManifest m = write_dataset(ds, dir, dtype);
    {
      const Dataset back = read_dataset(dir);
      std::size_t mismatches = 0;
      for (const auto& [key, s] : ds.series) {
        const auto& r = back.series.at(key);
        for (std::size_t i = 0; i < s.outputs.size(); ++i) {
          const double expect = dtype == DType::f64 ? s.outputs[i] : static_cast<double>(static_cast<float>(s.outputs[i]));
          mismatches += std::memcmp(&expect, &r.outputs[i], sizeof(double)) != 0;
        }
        for (std::size_t i = 0; i < s.inputs->size(); ++i) {
          const double v = (*s.inputs)[i];
          const double expect = dtype == DType::f64 ? v : static_cast<double>(static_cast<float>(v));
          mismatches += std::memcmp(&expect, &(*r.inputs)[i], sizeof(double)) != 0;
        }
      }
      ok = ok && mismatches == 0;
      notes.push_back(fmt::format("{} bit mismatches {}", name, mismatches));
    }
    // Corrupt every tensor file in turn; each must be caught.
    std::size_t detected = 0;
    for (const auto& [rel, sum] : m.checksums) {
      const fs::path path = dir / rel;
      const std::uintmax_t offset = fs::file_size(path) / 2;
      std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
      char byte = 0;
      f.seekg(static_cast<std::streamoff>(offset));
      f.read(&byte, 1);
      const char flipped = static_cast<char>(byte ^ 0x01);
      f.seekp(static_cast<std::streamoff>(offset));
      f.write(&flipped, 1);
      f.close();
      try {
        read_dataset(dir);
      } catch (const IntegrityError&) {
        ++detected;
      }
      std::fstream r(path, std::ios::in | std::ios::out | std::ios::binary);
      r.seekp(static_cast<std::streamoff>(offset));
      r.write(&byte, 1);
    }
    ok = ok && detected == m.checksums.size();
    notes.push_back(fmt::format("{} corruption detected {}/{}", name, detected, m.checksums.size()));
    fs::remove_all(dir);
  }
  return {ok, fmt::format("{}, {:.1f}s", fmt::join(notes, ", "), seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: acceptance <acceptance-config.json> <work-dir>\n";
    return 2;
  }
  const fs::path config_path = argv[1];
  const fs::path work = argv[2];
  fs::remove_all(work);
  fs::create_directories(work);

  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << fmt::format("{} criterion {}: {} -- {}", o.pass ? "PASS" : "FAIL", id, name, o.detail) << std::endl;
  };

  report(1, "metric oracle equivalence", metric_oracle);
  report(2, "latitude weight law", weight_law);
  report(3, "MLP gradient check", gradient_check);
  report(4, "planted recovery", planted_recovery);
  report(5, "planted shift direction", shift_direction);
  report(6, "split laws", split_laws);
  report(7, "schedule anchors", schedule_anchors);

  // Criterion 10 runs the full 12 x 8 sweep; criterion 8 repeats it with the
  // same config and seed and compares bytes.
  CliOptions run1;
  run1.config_path = config_path.string();
  run1.out_dir = (work / "run1").string();
  run1.generate = true;
  int code1 = -1;
  double secs1 = 0.0;
  std::ostringstream sink;
  {
    const auto t0 = Clock::now();
    code1 = run_command("experiment", run1, sink, std::cerr);
    secs1 = seconds_since(t0);
  }

  report(8, "end-to-end determinism", [&]() -> Outcome {
    CliOptions run2 = run1;
    run2.out_dir = (work / "run2").string();
    const int code2 = run_command("experiment", run2, sink, std::cerr);
    if (code1 != kExitOk || code2 != kExitOk) return {false, fmt::format("exit codes {} and {}", code1, code2)};
    Outcome o = compare_files(work / "run1" / "results", work / "run2" / "results",
                              {"records.csv", "table.csv", "table.md"});
    if (o.pass) o.detail = "records.csv, table.csv and table.md byte-identical across two runs";
    return o;
  });
  report(9, "dataset round trip", round_trip);
  report(10, "full desk-scale experiment", [&]() -> Outcome {
    if (code1 != kExitOk) return {false, fmt::format("experiment exited {}", code1)};
    const auto records = records_from_csv(read_file(work / "run1" / "results" / "records.csv"));
    const ResultsTable table = build_results_table(records);
    const auto missing = std::count(table.cells.begin(), table.cells.end(), std::nullopt);
    return {secs1 < 300.0 && records.size() == 150 && missing == 0,
            fmt::format("{} records (150), {} missing cells, {:.1f}s (< 300s)", records.size(), missing, secs1)};
  });

  std::cout << fmt::format("{} of 10 criteria passed", 10 - failures) << std::endl;
  return failures == 0 ? 0 : 1;
}
