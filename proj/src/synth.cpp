#include "climashift/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "climashift/errors.hpp"
#include "climashift/rng.hpp"

namespace climashift {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double seasonal_phase(std::size_t month_index) {
  return std::sin(2.0 * std::numbers::pi * static_cast<double>(month_index % kMonthsPerYear) / 12.0);
}

const Ramp& ramp_for(const ForcingParams& params, const ScenarioSpec& scenario, Forcer forcer) {
  const ForcerParams& fp = params.forcers[static_cast<std::size_t>(forcer)];
  auto it = fp.ramps.find(scenario.id);
  if (it == fp.ramps.end()) {
    throw ConfigError("generation.forcing." + std::string(kForcerNames[static_cast<std::size_t>(forcer)]) +
                          ".ramps",
                      "no ramp for scenario '" + scenario.id + "'");
  }
  return it->second;
}

void check_years(const ScenarioSpec& scenario, int first_year, int last_year) {
  if (first_year > last_year || !scenario.covers(first_year) || !scenario.covers(last_year)) {
    throw RangeError("years " + std::to_string(first_year) + "-" + std::to_string(last_year) +
                     " outside scenario " + scenario.id + " (" + std::to_string(scenario.first_year) + "-" +
                     std::to_string(scenario.last_year) + ")");
  }
}

template <class Fn>
Field field_from(const GridSpec& grid, Fn&& fn) {
  Field f = Field::filled(grid, 0.0);
  for (std::size_t i = 0; i < grid.n_lat; ++i) {
    for (std::size_t j = 0; j < grid.n_lon; ++j) {
      f.values[i * grid.n_lon + j] = fn(grid.lat_deg[i] * kDeg, grid.lon_deg[j] * kDeg);
    }
  }
  return f;
}

}  // namespace

double Ramp::value(double tau) const {
  double frac = tau;
  if (shape == RampShape::logistic) {
    const double lo = sigmoid(-logistic_rate * logistic_mid);
    const double hi = sigmoid(logistic_rate * (1.0 - logistic_mid));
    frac = (sigmoid(logistic_rate * (tau - logistic_mid)) - lo) / (hi - lo);
  }
  return start_level + (end_level - start_level) * frac;
}

Field render_pattern(const PatternSpec& spec, const GridSpec& grid) {
  Field f = field_from(grid, [&](double lat, double lon) {
    const double band_arg = (lat / kDeg - spec.band_lat) / spec.band_width;
    return spec.floor + spec.hemi * std::sin(lat) +
           spec.band_amp * std::exp(-band_arg * band_arg) * (1.0 + spec.lon_amp * std::cos(lon - spec.lon_phase_deg * kDeg));
  });
  const double mean = weighted_mean(f.values, grid, lat_weights(grid));
  if (!(mean > 0.0)) throw InvalidArgument("forcing pattern has non-positive weighted mean");
  for (double& v : f.values) v /= mean;
  return f;
}

ForcingParams default_forcing_params() {
  ForcingParams p;
  auto ramps = [](Ramp historical, std::array<double, 4> ssp_ends) {
    std::map<std::string, Ramp> m;
    m.emplace(std::string(kHistorical), historical);
    for (std::size_t k = 0; k < kSspScenarios.size(); ++k) {
      m.emplace(std::string(kSspScenarios[k]), Ramp{historical.end_level, ssp_ends[k], RampShape::linear});
    }
    return m;
  };
  // Distinct historical S-curves keep the four global-mean forcings linearly
  // independent when a model only sees 1850-2014.
  auto& co2 = p.forcers[0];
  co2.pattern = PatternSpec{};
  co2.seasonal_amplitude = 0.02;
  co2.ramps = ramps(Ramp{0.0, 1.0, RampShape::logistic, 0.80, 7.0}, {1.3, 2.2, 3.2, 5.0});

  auto& ch4 = p.forcers[1];
  ch4.pattern = PatternSpec{.floor = 1.0, .hemi = 0.2};
  ch4.seasonal_amplitude = 0.02;
  ch4.ramps = ramps(Ramp{0.0, 1.0, RampShape::logistic, 0.65, 6.0}, {0.6, 1.1, 1.7, 2.2});

  auto& bc = p.forcers[2];
  bc.pattern = PatternSpec{.floor = 0.2, .band_amp = 1.0, .band_lat = 25.0, .band_width = 20.0, .lon_amp = 0.5,
                           .lon_phase_deg = 100.0};
  bc.seasonal_amplitude = 0.05;
  bc.ramps = ramps(Ramp{0.0, 1.0, RampShape::logistic, 0.60, 10.0}, {0.4, 0.7, 1.1, 0.9});

  auto& so2 = p.forcers[3];
  so2.pattern = PatternSpec{.floor = 0.2, .band_amp = 1.0, .band_lat = 40.0, .band_width = 15.0, .lon_amp = 0.5,
                            .lon_phase_deg = 260.0};
  so2.seasonal_amplitude = 0.05;
  so2.ramps = ramps(Ramp{0.0, 1.0, RampShape::logistic, 0.70, 12.0}, {0.3, 0.5, 0.9, 0.4});
  return p;
}

void validate_forcing(const ForcingParams& params, std::span<const ScenarioSpec> scenarios) {
  const ScenarioSpec* historical = nullptr;
  for (const ScenarioSpec& s : scenarios) {
    if (s.id == kHistorical) historical = &s;
  }
  for (std::size_t g = 0; g < kNumForcers; ++g) {
    const ForcerParams& fp = params.forcers[g];
    const std::string path = "generation.forcing." + std::string(kForcerNames[g]);
    for (const ScenarioSpec& s : scenarios) {
      auto it = fp.ramps.find(s.id);
      if (it == fp.ramps.end()) throw ConfigError(path + ".ramps", "no ramp for scenario '" + s.id + "'");
      const Ramp& r = it->second;
      if (!std::isfinite(r.start_level) || !std::isfinite(r.end_level)) {
        throw ConfigError(path + ".ramps." + s.id, "levels must be finite");
      }
      if (r.shape == RampShape::logistic && !(r.logistic_rate > 0.0 && r.logistic_mid > 0.0 && r.logistic_mid < 1.0)) {
        throw ConfigError(path + ".ramps." + s.id, "logistic ramps need rate > 0 and 0 < mid < 1");
      }
      if (historical != nullptr && s.id != kHistorical && s.first_year == historical->last_year + 1) {
        const Ramp& h = fp.ramps.at(historical->id);
        if (std::abs(h.end_level - r.start_level) > 1e-12) {
          throw ConfigError(path + ".ramps." + s.id, "start level must equal the historical end level");
        }
      }
    }
    if (!std::isfinite(fp.seasonal_amplitude)) throw ConfigError(path + ".seasonal_amplitude", "must be finite");
    if (g == static_cast<std::size_t>(Forcer::CO2) || g == static_cast<std::size_t>(Forcer::CH4)) {
      double prev = -std::numeric_limits<double>::infinity();
      for (std::string_view ssp : kSspScenarios) {
        auto it = fp.ramps.find(std::string(ssp));
        const bool present = std::any_of(scenarios.begin(), scenarios.end(), [&](const ScenarioSpec& s) { return s.id == ssp; });
        if (!present || it == fp.ramps.end()) continue;
        if (!(it->second.end_level > prev)) {
          throw ConfigError(path + ".ramps." + std::string(ssp),
                            "end levels must increase strictly from ssp126 to ssp585");
        }
        prev = it->second.end_level;
      }
    }
  }
}

std::vector<double> forcing_ramp(const ForcingParams& params, const ScenarioSpec& scenario, Forcer forcer,
                                 int first_year, int last_year) {
  check_years(scenario, first_year, last_year);
  const Ramp& ramp = ramp_for(params, scenario, forcer);
  const double total = static_cast<double>(scenario.years()) * kMonthsPerYear;
  const std::size_t offset = static_cast<std::size_t>(first_year - scenario.first_year) * kMonthsPerYear;
  const std::size_t n = static_cast<std::size_t>(last_year - first_year + 1) * kMonthsPerYear;
  std::vector<double> out(n);
  for (std::size_t m = 0; m < n; ++m) {
    out[m] = ramp.value((static_cast<double>(offset + m) + 0.5) / total);
  }
  return out;
}

std::vector<double> forcing_trajectory(const ForcingParams& params, const ScenarioSpec& scenario, Forcer forcer,
                                       int first_year, int last_year) {
  std::vector<double> out = forcing_ramp(params, scenario, forcer, first_year, last_year);
  const double amp = params.forcers[static_cast<std::size_t>(forcer)].seasonal_amplitude;
  for (std::size_t m = 0; m < out.size(); ++m) out[m] += amp * seasonal_phase(m);
  return out;
}

std::vector<double> render_forcing_fields(std::span<const double> trajectory, const Field& pattern,
                                          const GridSpec& grid) {
  if (!pattern.matches(grid)) throw ContractError("forcing pattern is not defined on this grid");
  const std::size_t cells = grid.cells();
  std::vector<double> out(trajectory.size() * cells);
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    for (std::size_t c = 0; c < cells; ++c) out[t * cells + c] = trajectory[t] * pattern.values[c];
  }
  return out;
}

std::vector<double> build_scenario_inputs(const ForcingParams& params, const ScenarioSpec& scenario,
                                          const GridSpec& grid) {
  const std::size_t cells = grid.cells();
  const std::size_t months = static_cast<std::size_t>(scenario.years()) * kMonthsPerYear;
  std::vector<double> inputs(months * kNumForcers * cells);
  for (std::size_t g = 0; g < kNumForcers; ++g) {
    const auto traj = forcing_trajectory(params, scenario, static_cast<Forcer>(g), scenario.first_year,
                                         scenario.last_year);
    const Field pattern = render_pattern(params.forcers[g].pattern, grid);
    const auto fields = render_forcing_fields(traj, pattern, grid);
    for (std::size_t t = 0; t < months; ++t) {
      std::copy_n(fields.begin() + static_cast<std::ptrdiff_t>(t * cells), cells,
                  inputs.begin() + static_cast<std::ptrdiff_t>((t * kNumForcers + g) * cells));
    }
  }
  return inputs;
}

void validate_oracle_spec(const OracleSpec& spec) {
  const std::string path = "generation.oracles." + spec.id;
  if (spec.id.empty()) throw ConfigError("generation.oracles", "oracle id must be non-empty");
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
    throw ConfigError(path + ".noise_sigma", "must be a finite value >= 0");
  }
  if (!(spec.ar_rho >= 0.0 && spec.ar_rho < 1.0)) throw ConfigError(path + ".ar_rho", "must lie in [0, 1)");
  if (!(spec.pr_base >= 0.0)) throw ConfigError(path + ".pr_base", "must be >= 0");
}

OracleConfig make_oracle_config(const OracleSpec& spec, const GridSpec& grid) {
  validate_oracle_spec(spec);
  OracleConfig c;
  c.oracle_id = spec.id;
  c.a = field_from(grid, [&](double lat, double lon) {
    const double cl = std::cos(lat);
    return spec.base_temp + spec.temp_contrast * cl * cl + std::cos(lon);
  });
  for (std::size_t g = 0; g < kNumForcers; ++g) {
    c.b[g] = field_from(grid, [&](double lat, double) {
      const double sl = std::sin(lat);
      return spec.sensitivity[g] * (1.0 + spec.polar_amplification * sl * sl);
    });
    c.c[g] = field_from(grid, [&](double lat, double) {
      const double cl = std::cos(lat);
      return spec.pr_sensitivity[g] * (0.5 + cl * cl);
    });
  }
  c.q = field_from(grid, [&](double lat, double) {
    const double sl = std::sin(lat);
    return spec.quadratic * (1.0 + sl * sl);
  });
  c.s_amp = field_from(grid, [&](double lat, double) { return spec.seasonal_amplitude * std::sin(lat); });
  c.p0 = field_from(grid, [&](double lat, double) {
    const double cl = std::cos(lat);
    return spec.pr_base * (0.5 + cl * cl);
  });
  c.noise_sigma = spec.noise_sigma;
  c.ar_rho = spec.ar_rho;
  return c;
}

std::vector<OracleSpec> default_oracle_table() {
  auto make = [](std::string id, std::array<double, 4> sens, double polar, double quad, double seasonal,
                 double pr_base, std::array<double, 4> pr_sens, double sigma, double rho) {
    OracleSpec s;
    s.id = std::move(id);
    s.sensitivity = sens;
    s.polar_amplification = polar;
    s.quadratic = quad;
    s.seasonal_amplitude = seasonal;
    s.pr_base = pr_base;
    s.pr_sensitivity = pr_sens;
    s.noise_sigma = sigma;
    s.ar_rho = rho;
    return s;
  };
  return {
      make("synth-awi", {1.8, 0.50, 0.30, -0.9}, 1.0, 0.04, 10.0, 3.0, {0.08, 0.03, -0.05, -0.10}, 0.30, 0.50),
      make("synth-ecearth", {2.2, 0.60, 0.40, -1.1}, 1.2, 0.06, 11.0, 3.2, {0.10, 0.04, -0.04, -0.12}, 0.40, 0.60),
      make("synth-fgoals", {1.5, 0.40, 0.20, -0.7}, 0.8, 0.03, 9.0, 2.8, {0.06, 0.02, -0.06, -0.08}, 0.25, 0.40),
      make("synth-bcc", {1.9, 0.45, 0.35, -0.8}, 0.9, 0.05, 10.5, 3.0, {0.07, 0.03, -0.05, -0.09}, 0.35, 0.50),
      make("synth-mpi", {2.0, 0.55, 0.25, -1.0}, 1.1, 0.05, 9.5, 3.1, {0.09, 0.035, -0.045, -0.11}, 0.45, 0.55),
  };
}

std::vector<double> simulate_oracle(const OracleConfig& config, const GridSpec& grid,
                                    std::span<const double> inputs, std::uint64_t seed) {
  const std::size_t cells = grid.cells();
  const std::size_t frame = kNumForcers * cells;
  if (inputs.empty() || inputs.size() % frame != 0) {
    throw ContractError("inputs must be shaped [months][4][n_lat][n_lon]");
  }
  if (!config.a.matches(grid) || !config.q.matches(grid) || !config.s_amp.matches(grid) || !config.p0.matches(grid)) {
    throw ContractError("oracle fields are not defined on this grid");
  }
  for (std::size_t g = 0; g < kNumForcers; ++g) {
    if (!config.b[g].matches(grid) || !config.c[g].matches(grid)) {
      throw ContractError("oracle sensitivity fields are not defined on this grid");
    }
  }
  const std::size_t months = inputs.size() / frame;
  std::vector<double> out(months * kNumOutputs * cells);
  std::vector<double> eps_tas(cells, 0.0);
  std::vector<double> eps_pr(cells, 0.0);
  NormalSampler normal(seed);
  const double sigma = config.noise_sigma;
  const double innovation = sigma * std::sqrt(1.0 - config.ar_rho * config.ar_rho);

  for (std::size_t t = 0; t < months; ++t) {
    const double season = seasonal_phase(t);
    const double* in = inputs.data() + t * frame;
    double* tas = out.data() + t * kNumOutputs * cells;
    double* pr = tas + cells;
    for (std::size_t c = 0; c < cells; ++c) {
      const double eta_tas = normal.next();
      const double eta_pr = normal.next();
      if (t == 0) {
        eps_tas[c] = sigma * eta_tas;
        eps_pr[c] = sigma * eta_pr;
      } else {
        eps_tas[c] = config.ar_rho * eps_tas[c] + innovation * eta_tas;
        eps_pr[c] = config.ar_rho * eps_pr[c] + innovation * eta_pr;
      }
      double lin_t = 0.0;
      double lin_p = 0.0;
      double total = 0.0;
      for (std::size_t g = 0; g < kNumForcers; ++g) {
        const double f = in[g * cells + c];
        lin_t += config.b[g].values[c] * f;
        lin_p += config.c[g].values[c] * f;
        total += f;
      }
      tas[c] = config.a.values[c] + lin_t + config.q.values[c] * total * total + config.s_amp.values[c] * season +
               eps_tas[c];
      pr[c] = std::max(0.0, config.p0.values[c] + lin_p + eps_pr[c]);
    }
  }
  return out;
}

void validate_generation(const GenerationConfig& config) {
  if (config.n_lat < 1) throw ConfigError("config.grid.n_lat", "must be >= 1");
  if (config.n_lon < 1) throw ConfigError("config.grid.n_lon", "must be >= 1");
  if (config.scenarios.empty()) throw ConfigError("config.scenarios", "at least one scenario is required");
  std::set<std::string> seen;
  for (const ScenarioSpec& s : config.scenarios) {
    if (s.id.empty()) throw ConfigError("config.scenarios", "scenario id must be non-empty");
    if (!seen.insert(s.id).second) throw ConfigError("config.scenarios", "duplicate scenario '" + s.id + "'");
    if (s.first_year > s.last_year) throw ConfigError("config.scenarios." + s.id, "first_year > last_year");
  }
  if (config.oracles.empty()) throw ConfigError("config.oracles", "at least one oracle is required");
  seen.clear();
  for (const OracleSpec& o : config.oracles) {
    validate_oracle_spec(o);
    if (!seen.insert(o.id).second) throw ConfigError("config.oracles", "duplicate oracle '" + o.id + "'");
  }
  validate_forcing(config.forcing, config.scenarios);
}

Dataset build_dataset(const GenerationConfig& config, std::uint64_t seed) {
  validate_generation(config);
  Dataset ds;
  ds.grid = build_grid(config.n_lat, config.n_lon);
  ds.layout.scenarios = config.scenarios;
  for (const OracleSpec& o : config.oracles) ds.layout.oracles.push_back(o.id);

  std::vector<OracleConfig> oracles;
  oracles.reserve(config.oracles.size());
  for (const OracleSpec& o : config.oracles) oracles.push_back(make_oracle_config(o, ds.grid));

  for (const ScenarioSpec& s : config.scenarios) {
    auto inputs = std::make_shared<const std::vector<double>>(build_scenario_inputs(config.forcing, s, ds.grid));
    for (const OracleConfig& oc : oracles) {
      ScenarioSeries series;
      series.scenario = s.id;
      series.oracle_id = oc.oracle_id;
      series.first_year = s.first_year;
      series.last_year = s.last_year;
      series.inputs = inputs;
      series.outputs = simulate_oracle(oc, ds.grid, *inputs, derive_seed(seed, {oc.oracle_id, s.id}));
      ds.series.emplace(std::make_pair(oc.oracle_id, s.id), std::move(series));
    }
  }
  return ds;
}

}  // namespace climashift
