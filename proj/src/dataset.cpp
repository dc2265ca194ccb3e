#include "climashift/dataset.hpp"

#include <algorithm>

#include "climashift/errors.hpp"

namespace climashift {

std::vector<ScenarioSpec> default_scenarios() {
  std::vector<ScenarioSpec> out;
  out.push_back({std::string(kHistorical), 1850, 2014});
  for (std::string_view ssp : kSspScenarios) out.push_back({std::string(ssp), 2015, 2100});
  return out;
}

const ScenarioSpec* DatasetLayout::find_scenario(std::string_view id) const {
  auto it = std::find_if(scenarios.begin(), scenarios.end(), [&](const ScenarioSpec& s) { return s.id == id; });
  return it == scenarios.end() ? nullptr : &*it;
}

bool DatasetLayout::has_oracle(std::string_view id) const {
  return std::find(oracles.begin(), oracles.end(), id) != oracles.end();
}

std::string to_string(const ChunkKey& key) {
  return key.oracle + "/" + key.scenario + "/" + std::to_string(key.year);
}

const ScenarioSeries& Dataset::at(std::string_view oracle, std::string_view scenario) const {
  auto it = series.find({std::string(oracle), std::string(scenario)});
  if (it == series.end()) {
    throw ContractError("dataset has no series for " + std::string(oracle) + "/" + std::string(scenario));
  }
  return it->second;
}

ChunkView Dataset::chunk(const ChunkKey& key) const {
  const ScenarioSeries& s = at(key.oracle, key.scenario);
  if (key.year < s.first_year || key.year > s.last_year) {
    throw ContractError("chunk year out of range: " + to_string(key));
  }
  const std::size_t k = static_cast<std::size_t>(key.year - s.first_year);
  const std::size_t in_len = kMonthsPerYear * kNumForcers * grid.cells();
  const std::size_t out_len = kMonthsPerYear * kNumOutputs * grid.cells();
  return ChunkView{key, std::span<const double>(*s.inputs).subspan(k * in_len, in_len),
                   std::span<const double>(s.outputs).subspan(k * out_len, out_len)};
}

std::vector<ChunkView> Dataset::chunks(std::span<const ChunkKey> keys) const {
  std::vector<ChunkView> out;
  out.reserve(keys.size());
  for (const ChunkKey& k : keys) out.push_back(chunk(k));
  return out;
}

std::vector<ChunkView> Dataset::scenario_chunks(std::string_view oracle, std::string_view scenario) const {
  const ScenarioSeries& s = at(oracle, scenario);
  std::vector<ChunkView> out;
  for (int y = s.first_year; y <= s.last_year; ++y) {
    out.push_back(chunk(ChunkKey{std::string(oracle), std::string(scenario), y}));
  }
  return out;
}

}  // namespace climashift
