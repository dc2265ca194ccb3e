#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "climashift/dataset_io.hpp"
#include "climashift/emulators.hpp"
#include "climashift/split.hpp"
#include "climashift/synth.hpp"

namespace climashift {

enum class Protocol { baseline, time_shift, ssp_rotation };

std::string_view to_string(Protocol p) noexcept;
/// Throws InvalidArgument for unknown names.
Protocol protocol_from_string(std::string_view name);
inline constexpr std::array<Protocol, 3> kAllProtocols{Protocol::baseline, Protocol::time_shift,
                                                       Protocol::ssp_rotation};

struct ExperimentConfig {
  std::uint64_t seed = 42;
  GenerationConfig generation;  // grid, scenarios, selected oracles, forcing
  DType dtype = DType::f64;
  std::vector<EmulatorKind> emulators{kAllEmulatorKinds.begin(), kAllEmulatorKinds.end()};
  std::map<EmulatorKind, TrainConfig> train;  // every selected kind has an entry
  std::vector<Protocol> protocols{kAllProtocols.begin(), kAllProtocols.end()};
  SplitOptions split;
  std::vector<std::string> time_shift_test_scenarios{"ssp245"};
  double report_threshold = 20.0;
  std::string output_dir = "climashift-out";
};

/// Builds a config from a JSON document. Missing keys keep their defaults;
/// unknown keys and inconsistent values throw ConfigError with a dotted
/// field path ("config.grid.n_lat").
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Throws IoError when the file cannot be read or parsed as JSON.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Checks cross-field invariants, including that the scenario list covers
/// every scenario the selected protocols need.
void validate_experiment(const ExperimentConfig& config);

/// Fully resolved config echo (defaults filled in).
nlohmann::json to_json(const ExperimentConfig& config);

/// Parses "baseline,time_shift" style lists. Throws ConfigError.
std::vector<Protocol> parse_protocol_list(std::string_view csv);

}  // namespace climashift
