#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "climashift/dataset.hpp"
#include "climashift/grid.hpp"

namespace climashift {

enum class RampShape { linear, logistic };

/// Smooth ramp from start_level to end_level over a scenario's coverage.
/// The logistic shape is rescaled so it hits both endpoints exactly.
struct Ramp {
  double start_level = 0.0;
  double end_level = 1.0;
  RampShape shape = RampShape::linear;
  double logistic_mid = 0.5;
  double logistic_rate = 10.0;

  /// tau in [0, 1] is the fraction of the scenario elapsed.
  double value(double tau) const;
};

/// value(lat, lon) = floor + hemi * sin(lat)
///                 + band_amp * exp(-((lat - band_lat) / band_width)^2) * (1 + lon_amp * cos(lon - lon_phase))
/// rendered on a grid and rescaled to a latitude-weighted mean of one.
struct PatternSpec {
  double floor = 1.0;
  double hemi = 0.0;
  double band_amp = 0.0;
  double band_lat = 0.0;
  double band_width = 20.0;
  double lon_amp = 0.0;
  double lon_phase_deg = 0.0;
};

Field render_pattern(const PatternSpec& spec, const GridSpec& grid);

struct ForcerParams {
  PatternSpec pattern;
  double seasonal_amplitude = 0.0;
  std::map<std::string, Ramp> ramps;  // keyed by scenario id
};

struct ForcingParams {
  std::array<ForcerParams, kNumForcers> forcers;
};

ForcingParams default_forcing_params();

/// Every scenario must have a ramp for every forcer; SSP ramps must start
/// where the historical ramp ends; CO2 and CH4 end levels must be strictly
/// ordered ssp126 < ssp245 < ssp370 < ssp585 when those scenarios exist.
void validate_forcing(const ForcingParams& params, std::span<const ScenarioSpec> scenarios);

/// Monthly global-mean forcing for years [first_year, last_year] of `scenario`:
/// ramp(tau_m) + seasonal_amplitude * sin(2 pi (m mod 12) / 12), with
/// tau_m = (m + 0.5) / months measured over the whole scenario coverage.
/// Throws RangeError when the years leave the scenario's coverage.
std::vector<double> forcing_trajectory(const ForcingParams& params, const ScenarioSpec& scenario,
                                       Forcer forcer, int first_year, int last_year);

/// Same, without the seasonal cycle.
std::vector<double> forcing_ramp(const ForcingParams& params, const ScenarioSpec& scenario, Forcer forcer,
                                 int first_year, int last_year);

/// field(t, x) = trajectory(t) * pattern(x); returns [months][n_lat][n_lon].
std::vector<double> render_forcing_fields(std::span<const double> trajectory, const Field& pattern,
                                          const GridSpec& grid);

/// Full [months][4][n_lat][n_lon] input tensor for one scenario.
std::vector<double> build_scenario_inputs(const ForcingParams& params, const ScenarioSpec& scenario,
                                          const GridSpec& grid);

/// Scalar parametrisation of a planted climate process; expanded onto a grid
/// by make_oracle_config.
struct OracleSpec {
  std::string id;
  double base_temp = 258.0;       // K
  double temp_contrast = 40.0;    // K, equator minus pole
  std::array<double, kNumForcers> sensitivity{};  // K per forcing unit
  double polar_amplification = 1.0;
  double quadratic = 0.0;         // K per forcing unit squared
  double seasonal_amplitude = 10.0;  // K
  double pr_base = 3.0;           // mm/day
  std::array<double, kNumForcers> pr_sensitivity{};  // mm/day per forcing unit
  double noise_sigma = 0.0;
  double ar_rho = 0.0;
};

/// Planted process on a concrete grid:
///   TAS = a + sum_g b_g F_g + q (sum_g F_g)^2 + s_amp sin(2 pi month / 12) + eps
///   PR  = max(0, p0 + sum_g c_g F_g + eps')
/// eps, eps' are independent per-cell AR(1) processes with stationary
/// standard deviation noise_sigma.
struct OracleConfig {
  std::string oracle_id;
  Field a;
  std::array<Field, kNumForcers> b;
  Field q;
  Field s_amp;
  Field p0;
  std::array<Field, kNumForcers> c;
  double noise_sigma = 0.0;
  double ar_rho = 0.0;
};

OracleConfig make_oracle_config(const OracleSpec& spec, const GridSpec& grid);
void validate_oracle_spec(const OracleSpec& spec);

/// Five stand-in configurations with distinct sensitivities and noise levels.
std::vector<OracleSpec> default_oracle_table();

/// Outputs [months][2][n_lat][n_lon] for inputs [months][4][n_lat][n_lon].
/// Noise draws: for each month, for each cell in row-major order, one normal
/// for TAS then one for PR, from NormalSampler(seed). The AR(1) state starts
/// at noise_sigma * eta_0 (stationary).
std::vector<double> simulate_oracle(const OracleConfig& config, const GridSpec& grid,
                                    std::span<const double> inputs, std::uint64_t seed);

struct GenerationConfig {
  long n_lat = 24;
  long n_lon = 36;
  std::vector<ScenarioSpec> scenarios = default_scenarios();
  std::vector<OracleSpec> oracles = default_oracle_table();
  ForcingParams forcing = default_forcing_params();
};

void validate_generation(const GenerationConfig& config);

/// One series per (oracle, scenario); noise sub-seeds are
/// derive_seed(seed, {oracle_id, scenario_id}).
Dataset build_dataset(const GenerationConfig& config, std::uint64_t seed);

}  // namespace climashift
