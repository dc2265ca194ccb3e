#include "climashift/dataset_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "climashift/errors.hpp"
#include "climashift/file_util.hpp"
#include "climashift/rng.hpp"

namespace climashift {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kManifestName = "manifest.json";

std::size_t dtype_bytes(DType d) { return d == DType::f32 ? 4 : 8; }
std::string dtype_name(DType d) { return d == DType::f32 ? "f32" : "f64"; }

template <class T>
T byteswap_value(T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  std::memcpy(&v, b, sizeof(T));
  return v;
}

template <class T>
void append_le(std::string& out, T v) {
  if constexpr (std::endian::native == std::endian::big) v = byteswap_value(v);
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

template <class T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) v = byteswap_value(v);
  return v;
}

std::string encode(std::span<const double> values, DType dtype) {
  std::string out;
  out.reserve(values.size() * dtype_bytes(dtype));
  for (double v : values) {
    if (dtype == DType::f32) {
      append_le(out, static_cast<float>(v));
    } else {
      append_le(out, v);
    }
  }
  return out;
}

std::vector<double> decode(const std::string& bytes, DType dtype) {
  const std::size_t width = dtype_bytes(dtype);
  std::vector<double> out(bytes.size() / width);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = dtype == DType::f32 ? static_cast<double>(load_le<float>(bytes.data() + i * width))
                                 : load_le<double>(bytes.data() + i * width);
  }
  return out;
}

template <class T>
T require(const json& doc, const char* key, const std::string& origin) {
  if (!doc.contains(key)) throw IntegrityError(origin, std::string("manifest is missing '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IntegrityError(origin, std::string("manifest field '") + key + "' malformed: " + e.what());
  }
}

}  // namespace

std::string tensor_path(std::string_view oracle, std::string_view scenario, bool inputs) {
  return std::string(oracle) + "/" + std::string(scenario) + (inputs ? "/inputs.bin" : "/outputs.bin");
}

json to_json(const DatasetManifest& m) {
  json scenarios = json::array();
  for (const ScenarioSpec& s : m.scenarios) {
    scenarios.push_back({{"id", s.id}, {"first_year", s.first_year}, {"last_year", s.last_year}});
  }
  json checksums = json::object();
  for (const auto& [path, sum] : m.checksums) checksums[path] = checksum_hex(sum);
  return json{
      {"format_version", m.format_version},
      {"grid", {{"n_lat", m.grid.n_lat}, {"n_lon", m.grid.n_lon}, {"lat_deg", m.grid.lat_deg}, {"lon_deg", m.grid.lon_deg}}},
      {"scenarios", scenarios},
      {"oracles", m.oracles},
      {"variables_in", m.variables_in},
      {"variables_out", m.variables_out},
      {"dtype", dtype_name(m.dtype)},
      {"byte_order", m.byte_order},
      {"layout", "[time][var][lat][lon]"},
      {"checksum_algorithm", "fnv1a64"},
      {"checksums", checksums},
  };
}

DatasetManifest manifest_from_json(const json& doc, const std::string& origin) {
  if (!doc.is_object()) throw IntegrityError(origin, "manifest is not a JSON object");
  DatasetManifest m;
  m.format_version = require<int>(doc, "format_version", origin);
  if (m.format_version != kDatasetFormatVersion) {
    throw VersionError(origin, "unsupported format_version " + std::to_string(m.format_version) + " (expected " +
                                   std::to_string(kDatasetFormatVersion) + ")");
  }
  const json grid = require<json>(doc, "grid", origin);
  const long n_lat = require<long>(grid, "n_lat", origin);
  const long n_lon = require<long>(grid, "n_lon", origin);
  try {
    m.grid = build_grid(n_lat, n_lon);
  } catch (const InvalidArgument& e) {
    throw IntegrityError(origin, e.what());
  }
  for (const json& s : require<json>(doc, "scenarios", origin)) {
    m.scenarios.push_back(ScenarioSpec{require<std::string>(s, "id", origin), require<int>(s, "first_year", origin),
                                       require<int>(s, "last_year", origin)});
  }
  m.oracles = require<std::vector<std::string>>(doc, "oracles", origin);
  m.variables_in = require<std::vector<std::string>>(doc, "variables_in", origin);
  m.variables_out = require<std::vector<std::string>>(doc, "variables_out", origin);
  const auto dtype = require<std::string>(doc, "dtype", origin);
  if (dtype == "f32") {
    m.dtype = DType::f32;
  } else if (dtype == "f64") {
    m.dtype = DType::f64;
  } else {
    throw IntegrityError(origin, "unknown dtype '" + dtype + "'");
  }
  m.byte_order = require<std::string>(doc, "byte_order", origin);
  if (m.byte_order != "little") throw IntegrityError(origin, "unsupported byte_order '" + m.byte_order + "'");
  const json checksums = require<json>(doc, "checksums", origin);
  for (const auto& [path, sum] : checksums.items()) {
    try {
      m.checksums[path] = parse_checksum_hex(sum.get<std::string>());
    } catch (const std::exception& e) {
      throw IntegrityError(origin, "checksum for " + path + ": " + e.what());
    }
  }
  std::vector<std::string> expect_in(kForcerNames.begin(), kForcerNames.end());
  std::vector<std::string> expect_out(kOutputNames.begin(), kOutputNames.end());
  if (m.variables_in != expect_in || m.variables_out != expect_out) {
    throw IntegrityError(origin, "unexpected variable lists");
  }
  return m;
}

DatasetManifest write_dataset(const Dataset& dataset, const fs::path& dir, DType dtype) {
  DatasetManifest m;
  m.grid = dataset.grid;
  m.scenarios = dataset.layout.scenarios;
  m.oracles = dataset.layout.oracles;
  m.variables_in.assign(kForcerNames.begin(), kForcerNames.end());
  m.variables_out.assign(kOutputNames.begin(), kOutputNames.end());
  m.dtype = dtype;

  for (const std::string& oracle : m.oracles) {
    for (const ScenarioSpec& s : m.scenarios) {
      const ScenarioSeries& series = dataset.at(oracle, s.id);
      for (bool inputs : {true, false}) {
        const std::string rel = tensor_path(oracle, s.id, inputs);
        const std::string bytes = encode(inputs ? std::span<const double>(*series.inputs)
                                                : std::span<const double>(series.outputs),
                                         dtype);
        atomic_write(dir / rel, bytes);
        Fnv1a64 h;
        h.update(bytes.data(), bytes.size());
        m.checksums[rel] = h.digest();
      }
    }
  }
  atomic_write(dir / kManifestName, to_json(m).dump(2) + "\n");
  return m;
}

Dataset read_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestName;
  if (!fs::exists(manifest_path)) throw IoError(manifest_path.string(), "dataset manifest not found");
  json doc;
  try {
    doc = json::parse(read_file(manifest_path));
  } catch (const json::parse_error& e) {
    throw IntegrityError(manifest_path.string(), std::string("manifest is not valid JSON: ") + e.what());
  }
  const DatasetManifest m = manifest_from_json(doc, manifest_path.string());

  Dataset ds;
  ds.grid = m.grid;
  ds.layout.oracles = m.oracles;
  ds.layout.scenarios = m.scenarios;
  const std::size_t cells = m.grid.cells();
  const std::size_t width = dtype_bytes(m.dtype);

  // Identical input tensors (the same scenario for different oracles) share storage.
  std::map<std::uint64_t, std::shared_ptr<const std::vector<double>>> shared_inputs;

  for (const std::string& oracle : m.oracles) {
    for (const ScenarioSpec& s : m.scenarios) {
      ScenarioSeries series;
      series.scenario = s.id;
      series.oracle_id = oracle;
      series.first_year = s.first_year;
      series.last_year = s.last_year;
      for (bool inputs : {true, false}) {
        const std::string rel = tensor_path(oracle, s.id, inputs);
        const fs::path path = dir / rel;
        auto sum_it = m.checksums.find(rel);
        if (sum_it == m.checksums.end()) throw IntegrityError(path.string(), "file has no manifest checksum");
        if (!fs::exists(path)) throw IoError(path.string(), "tensor file missing");
        const std::string bytes = read_file(path);
        const std::size_t expected =
            series.months() * (inputs ? kNumForcers : kNumOutputs) * cells * width;
        if (bytes.size() != expected) {
          throw IntegrityError(path.string(), "size " + std::to_string(bytes.size()) + " bytes, expected " +
                                                  std::to_string(expected));
        }
        Fnv1a64 h;
        h.update(bytes.data(), bytes.size());
        if (h.digest() != sum_it->second) {
          throw IntegrityError(path.string(), "checksum mismatch (manifest " + checksum_hex(sum_it->second) +
                                                  ", file " + checksum_hex(h.digest()) + ")");
        }
        std::vector<double> values = decode(bytes, m.dtype);
        if (inputs) {
          auto it = shared_inputs.find(h.digest());
          if (it != shared_inputs.end() && *it->second == values) {
            series.inputs = it->second;
          } else {
            series.inputs = std::make_shared<const std::vector<double>>(std::move(values));
            shared_inputs.emplace(h.digest(), series.inputs);
          }
        } else {
          series.outputs = std::move(values);
        }
      }
      ds.series.emplace(std::make_pair(oracle, s.id), std::move(series));
    }
  }
  return ds;
}

std::vector<YearChunk> chunk_years(const ScenarioSeries& series, const GridSpec& grid) {
  const std::size_t cells = grid.cells();
  if (!series.inputs) throw ContractError("series has no inputs");
  const std::size_t in_frame = kNumForcers * cells;
  const std::size_t out_frame = kNumOutputs * cells;
  if (series.inputs->size() % in_frame != 0 || series.outputs.size() % out_frame != 0) {
    throw ContractError("series tensors do not match the grid");
  }
  const std::size_t months = series.inputs->size() / in_frame;
  if (series.outputs.size() / out_frame != months) throw ContractError("input and output month counts differ");
  if (months % kMonthsPerYear != 0) {
    throw ContractError("series has " + std::to_string(months) + " months, not a whole number of years");
  }
  const std::size_t years = months / kMonthsPerYear;
  std::vector<YearChunk> out;
  out.reserve(years);
  for (std::size_t k = 0; k < years; ++k) {
    YearChunk c;
    c.oracle_id = series.oracle_id;
    c.scenario = series.scenario;
    c.year = series.first_year + static_cast<int>(k);
    auto in_begin = series.inputs->begin() + static_cast<std::ptrdiff_t>(k * kMonthsPerYear * in_frame);
    c.inputs.assign(in_begin, in_begin + static_cast<std::ptrdiff_t>(kMonthsPerYear * in_frame));
    auto out_begin = series.outputs.begin() + static_cast<std::ptrdiff_t>(k * kMonthsPerYear * out_frame);
    c.outputs.assign(out_begin, out_begin + static_cast<std::ptrdiff_t>(kMonthsPerYear * out_frame));
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace climashift
