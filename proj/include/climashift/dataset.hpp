#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "climashift/grid.hpp"

namespace climashift {

inline constexpr std::size_t kMonthsPerYear = 12;
inline constexpr std::size_t kNumForcers = 4;
inline constexpr std::size_t kNumOutputs = 2;

enum class Forcer { CO2 = 0, CH4 = 1, BC = 2, SO2 = 3 };
enum class OutputVar { TAS = 0, PR = 1 };

inline constexpr std::array<std::string_view, kNumForcers> kForcerNames{"CO2", "CH4", "BC", "SO2"};
inline constexpr std::array<std::string_view, kNumOutputs> kOutputNames{"TAS", "PR"};

inline constexpr std::string_view kHistorical = "historical";
inline constexpr std::array<std::string_view, 4> kSspScenarios{"ssp126", "ssp245", "ssp370", "ssp585"};

/// A scenario label and the inclusive calendar-year range it covers.
struct ScenarioSpec {
  std::string id;
  int first_year = 0;
  int last_year = 0;

  int years() const noexcept { return last_year - first_year + 1; }
  bool covers(int year) const noexcept { return year >= first_year && year <= last_year; }
  bool operator==(const ScenarioSpec&) const = default;
};

/// historical 1850-2014 followed by the four SSPs over 2015-2100.
std::vector<ScenarioSpec> default_scenarios();

/// Which (oracle, scenario, year) chunks exist, without any tensor data.
struct DatasetLayout {
  std::vector<std::string> oracles;
  std::vector<ScenarioSpec> scenarios;

  const ScenarioSpec* find_scenario(std::string_view id) const;
  bool has_oracle(std::string_view id) const;
};

/// Monthly forcing inputs and oracle outputs for one (oracle, scenario).
///
/// inputs:  [months][4 forcers][n_lat][n_lon]
/// outputs: [months][2 vars (TAS, PR)][n_lat][n_lon]
/// Series always start in January. Input tensors do not depend on the oracle,
/// so they are shared between the series of one scenario.
struct ScenarioSeries {
  std::string scenario;
  std::string oracle_id;
  int first_year = 0;
  int last_year = 0;
  std::shared_ptr<const std::vector<double>> inputs;
  std::vector<double> outputs;

  std::size_t months() const noexcept {
    return static_cast<std::size_t>(last_year - first_year + 1) * kMonthsPerYear;
  }
};

struct ChunkKey {
  std::string oracle;
  std::string scenario;
  int year = 0;

  auto operator<=>(const ChunkKey&) const = default;
  bool operator==(const ChunkKey&) const = default;
};

std::string to_string(const ChunkKey& key);

/// Non-owning view of one year of a series.
struct ChunkView {
  ChunkKey key;
  std::span<const double> inputs;   // [12][4][n_lat][n_lon]
  std::span<const double> outputs;  // [12][2][n_lat][n_lon]
};

struct Dataset {
  GridSpec grid;
  DatasetLayout layout;
  std::map<std::pair<std::string, std::string>, ScenarioSeries> series;

  const ScenarioSeries& at(std::string_view oracle, std::string_view scenario) const;
  ChunkView chunk(const ChunkKey& key) const;
  std::vector<ChunkView> chunks(std::span<const ChunkKey> keys) const;
  /// All chunks of one oracle/scenario pair in chronological order.
  std::vector<ChunkView> scenario_chunks(std::string_view oracle, std::string_view scenario) const;
};

}  // namespace climashift
