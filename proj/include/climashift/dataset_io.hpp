#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "climashift/dataset.hpp"

namespace climashift {

enum class DType { f32, f64 };

inline constexpr int kDatasetFormatVersion = 1;

/// Contents of manifest.json. Tensor paths are relative to the dataset
/// directory: "<oracle>/<scenario>/inputs.bin" and ".../outputs.bin".
struct DatasetManifest {
  int format_version = kDatasetFormatVersion;
  GridSpec grid;
  std::vector<ScenarioSpec> scenarios;
  std::vector<std::string> oracles;
  std::vector<std::string> variables_in;
  std::vector<std::string> variables_out;
  DType dtype = DType::f64;
  std::string byte_order = "little";
  std::map<std::string, std::uint64_t> checksums;
};

nlohmann::json to_json(const DatasetManifest& manifest);
/// Throws VersionError for an unknown format_version, IntegrityError for a
/// structurally broken manifest.
DatasetManifest manifest_from_json(const nlohmann::json& doc, const std::string& origin);

std::string tensor_path(std::string_view oracle, std::string_view scenario, bool inputs);

/// Writes manifest.json plus raw little-endian tensors, row-major
/// [time][var][lat][lon]. f32 output rounds each value to nearest float.
DatasetManifest write_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                              DType dtype = DType::f64);

/// Verifies every checksum and file size before returning. Errors:
/// IoError (missing file), IntegrityError (size/checksum), VersionError.
Dataset read_dataset(const std::filesystem::path& dir);

/// One calendar year of a series: inputs [12][4][n_lat][n_lon],
/// outputs [12][2][n_lat][n_lon].
struct YearChunk {
  std::string oracle_id;
  std::string scenario;
  int year = 0;
  std::vector<double> inputs;
  std::vector<double> outputs;
};

/// Chronological partition of a series into whole years. Throws
/// ContractError when the month count is not a multiple of 12.
std::vector<YearChunk> chunk_years(const ScenarioSeries& series, const GridSpec& grid);

}  // namespace climashift
