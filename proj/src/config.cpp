#include "climashift/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "climashift/errors.hpp"
#include "climashift/file_util.hpp"

namespace climashift {

using nlohmann::json;

std::string_view to_string(Protocol p) noexcept {
  switch (p) {
    case Protocol::baseline: return "baseline";
    case Protocol::time_shift: return "time_shift";
    case Protocol::ssp_rotation: return "ssp_rotation";
  }
  return "unknown";
}

Protocol protocol_from_string(std::string_view name) {
  for (Protocol p : kAllProtocols) {
    if (to_string(p) == name) return p;
  }
  throw InvalidArgument("unknown protocol '" + std::string(name) + "'");
}

namespace {

void check_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(path + "." + key, "unknown key");
    }
  }
}

template <typename T>
T get_as(const json& v, const std::string& path) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(path, "expected a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
        throw ConfigError(path, "expected a non-negative integer");
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path, "expected a string");
    }
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path, e.what());
  }
}

template <typename T>
void read_opt(const json& obj, std::string_view key, const std::string& path, T& out) {
  auto it = obj.find(key);
  if (it != obj.end()) out = get_as<T>(*it, path + "." + std::string(key));
}

std::vector<std::string> string_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_as<std::string>(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::array<double, kNumForcers> forcer_array(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != kNumForcers) throw ConfigError(path, "expected 4 numbers (CO2, CH4, BC, SO2)");
  std::array<double, kNumForcers> out{};
  for (std::size_t i = 0; i < kNumForcers; ++i) out[i] = get_as<double>(v[i], path + "[" + std::to_string(i) + "]");
  return out;
}

void apply_oracle(const json& obj, const std::string& path, OracleSpec& spec) {
  check_keys(obj, path, {"id", "base_temp", "temp_contrast", "sensitivity", "polar_amplification", "quadratic",
                         "seasonal_amplitude", "pr_base", "pr_sensitivity", "noise_sigma", "ar_rho"});
  read_opt(obj, "id", path, spec.id);
  read_opt(obj, "base_temp", path, spec.base_temp);
  read_opt(obj, "temp_contrast", path, spec.temp_contrast);
  if (obj.contains("sensitivity")) spec.sensitivity = forcer_array(obj["sensitivity"], path + ".sensitivity");
  read_opt(obj, "polar_amplification", path, spec.polar_amplification);
  read_opt(obj, "quadratic", path, spec.quadratic);
  read_opt(obj, "seasonal_amplitude", path, spec.seasonal_amplitude);
  read_opt(obj, "pr_base", path, spec.pr_base);
  if (obj.contains("pr_sensitivity")) spec.pr_sensitivity = forcer_array(obj["pr_sensitivity"], path + ".pr_sensitivity");
  read_opt(obj, "noise_sigma", path, spec.noise_sigma);
  read_opt(obj, "ar_rho", path, spec.ar_rho);
}

json oracle_to_json(const OracleSpec& s) {
  return {{"id", s.id},
          {"base_temp", s.base_temp},
          {"temp_contrast", s.temp_contrast},
          {"sensitivity", s.sensitivity},
          {"polar_amplification", s.polar_amplification},
          {"quadratic", s.quadratic},
          {"seasonal_amplitude", s.seasonal_amplitude},
          {"pr_base", s.pr_base},
          {"pr_sensitivity", s.pr_sensitivity},
          {"noise_sigma", s.noise_sigma},
          {"ar_rho", s.ar_rho}};
}

void apply_ramp(const json& obj, const std::string& path, Ramp& ramp) {
  check_keys(obj, path, {"start", "end", "shape", "mid", "rate"});
  read_opt(obj, "start", path, ramp.start_level);
  read_opt(obj, "end", path, ramp.end_level);
  if (obj.contains("shape")) {
    const auto shape = get_as<std::string>(obj["shape"], path + ".shape");
    if (shape == "linear") {
      ramp.shape = RampShape::linear;
    } else if (shape == "logistic") {
      ramp.shape = RampShape::logistic;
    } else {
      throw ConfigError(path + ".shape", "expected 'linear' or 'logistic'");
    }
  }
  read_opt(obj, "mid", path, ramp.logistic_mid);
  read_opt(obj, "rate", path, ramp.logistic_rate);
}

void apply_pattern(const json& obj, const std::string& path, PatternSpec& p) {
  check_keys(obj, path, {"floor", "hemi", "band_amp", "band_lat", "band_width", "lon_amp", "lon_phase_deg"});
  read_opt(obj, "floor", path, p.floor);
  read_opt(obj, "hemi", path, p.hemi);
  read_opt(obj, "band_amp", path, p.band_amp);
  read_opt(obj, "band_lat", path, p.band_lat);
  read_opt(obj, "band_width", path, p.band_width);
  read_opt(obj, "lon_amp", path, p.lon_amp);
  read_opt(obj, "lon_phase_deg", path, p.lon_phase_deg);
}

json forcing_to_json(const ForcingParams& f) {
  json out = json::object();
  for (std::size_t g = 0; g < kNumForcers; ++g) {
    const ForcerParams& fp = f.forcers[g];
    json ramps = json::object();
    for (const auto& [scenario, r] : fp.ramps) {
      ramps[scenario] = {{"start", r.start_level},
                         {"end", r.end_level},
                         {"shape", r.shape == RampShape::linear ? "linear" : "logistic"},
                         {"mid", r.logistic_mid},
                         {"rate", r.logistic_rate}};
    }
    const PatternSpec& p = fp.pattern;
    out[std::string(kForcerNames[g])] = {
        {"seasonal_amplitude", fp.seasonal_amplitude},
        {"pattern",
         {{"floor", p.floor},
          {"hemi", p.hemi},
          {"band_amp", p.band_amp},
          {"band_lat", p.band_lat},
          {"band_width", p.band_width},
          {"lon_amp", p.lon_amp},
          {"lon_phase_deg", p.lon_phase_deg}}},
        {"ramps", ramps}};
  }
  return out;
}

void apply_forcing(const json& obj, const std::string& path, ForcingParams& f) {
  check_keys(obj, path, {"CO2", "CH4", "BC", "SO2"});
  for (std::size_t g = 0; g < kNumForcers; ++g) {
    const std::string name(kForcerNames[g]);
    if (!obj.contains(name)) continue;
    const json& fo = obj[name];
    const std::string fpath = path + "." + name;
    check_keys(fo, fpath, {"seasonal_amplitude", "pattern", "ramps"});
    read_opt(fo, "seasonal_amplitude", fpath, f.forcers[g].seasonal_amplitude);
    if (fo.contains("pattern")) apply_pattern(fo["pattern"], fpath + ".pattern", f.forcers[g].pattern);
    if (fo.contains("ramps")) {
      const json& ramps = fo["ramps"];
      if (!ramps.is_object()) throw ConfigError(fpath + ".ramps", "expected an object keyed by scenario");
      for (const auto& [scenario, r] : ramps.items()) {
        apply_ramp(r, fpath + ".ramps." + scenario, f.forcers[g].ramps[scenario]);
      }
    }
  }
}

bool has_scenario(const std::vector<ScenarioSpec>& scenarios, std::string_view id) {
  return std::any_of(scenarios.begin(), scenarios.end(), [&](const ScenarioSpec& s) { return s.id == id; });
}

}  // namespace

std::vector<Protocol> parse_protocol_list(std::string_view csv) {
  std::vector<Protocol> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    std::string_view item = csv.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) throw ConfigError("config.protocols", "empty protocol name");
    try {
      const Protocol p = protocol_from_string(item);
      if (std::find(out.begin(), out.end(), p) != out.end()) {
        throw ConfigError("config.protocols", "duplicate protocol '" + std::string(item) + "'");
      }
      out.push_back(p);
    } catch (const InvalidArgument& e) {
      throw ConfigError("config.protocols", e.what());
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

ExperimentConfig parse_config(const json& doc) {
  const std::string root = "config";
  check_keys(doc, root,
             {"seed", "grid", "scenarios", "oracles", "oracle_table", "forcing", "dtype", "emulators", "train",
              "protocols", "split", "time_shift_test_scenarios", "report_threshold", "output_dir"});
  ExperimentConfig c;
  read_opt(doc, "seed", root, c.seed);

  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    check_keys(g, root + ".grid", {"n_lat", "n_lon"});
    read_opt(g, "n_lat", root + ".grid", c.generation.n_lat);
    read_opt(g, "n_lon", root + ".grid", c.generation.n_lon);
  }

  if (doc.contains("scenarios")) {
    const json& arr = doc["scenarios"];
    if (!arr.is_array()) throw ConfigError(root + ".scenarios", "expected an array");
    c.generation.scenarios.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = root + ".scenarios[" + std::to_string(i) + "]";
      check_keys(arr[i], path, {"id", "first_year", "last_year"});
      for (const char* k : {"id", "first_year", "last_year"}) {
        if (!arr[i].contains(k)) throw ConfigError(path + "." + k, "required");
      }
      ScenarioSpec s;
      s.id = get_as<std::string>(arr[i]["id"], path + ".id");
      s.first_year = get_as<int>(arr[i]["first_year"], path + ".first_year");
      s.last_year = get_as<int>(arr[i]["last_year"], path + ".last_year");
      c.generation.scenarios.push_back(s);
    }
  }

  if (doc.contains("oracle_table")) {
    const json& arr = doc["oracle_table"];
    if (!arr.is_array()) throw ConfigError(root + ".oracle_table", "expected an array");
    const std::vector<OracleSpec> defaults = default_oracle_table();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = root + ".oracle_table[" + std::to_string(i) + "]";
      if (!arr[i].is_object() || !arr[i].contains("id")) throw ConfigError(path + ".id", "required");
      const auto id = get_as<std::string>(arr[i]["id"], path + ".id");
      auto it = std::find_if(c.generation.oracles.begin(), c.generation.oracles.end(),
                             [&](const OracleSpec& o) { return o.id == id; });
      if (it == c.generation.oracles.end()) {
        c.generation.oracles.push_back(OracleSpec{});
        it = std::prev(c.generation.oracles.end());
      }
      apply_oracle(arr[i], path, *it);
    }
  }

  if (doc.contains("oracles")) {
    const auto ids = string_list(doc["oracles"], root + ".oracles");
    std::vector<OracleSpec> chosen;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      auto it = std::find_if(c.generation.oracles.begin(), c.generation.oracles.end(),
                             [&](const OracleSpec& o) { return o.id == ids[i]; });
      if (it == c.generation.oracles.end()) {
        throw ConfigError(root + ".oracles[" + std::to_string(i) + "]",
                          "unknown oracle '" + ids[i] + "' (define it in oracle_table)");
      }
      chosen.push_back(*it);
    }
    c.generation.oracles = std::move(chosen);
  }

  if (doc.contains("forcing")) apply_forcing(doc["forcing"], root + ".forcing", c.generation.forcing);

  if (doc.contains("dtype")) {
    const auto d = get_as<std::string>(doc["dtype"], root + ".dtype");
    if (d == "f32") {
      c.dtype = DType::f32;
    } else if (d == "f64") {
      c.dtype = DType::f64;
    } else {
      throw ConfigError(root + ".dtype", "expected 'f32' or 'f64'");
    }
  }

  if (doc.contains("emulators")) {
    const auto names = string_list(doc["emulators"], root + ".emulators");
    c.emulators.clear();
    for (std::size_t i = 0; i < names.size(); ++i) {
      try {
        const EmulatorKind k = emulator_kind_from_string(names[i]);
        if (std::find(c.emulators.begin(), c.emulators.end(), k) != c.emulators.end()) {
          throw ConfigError(root + ".emulators[" + std::to_string(i) + "]", "duplicate emulator");
        }
        c.emulators.push_back(k);
      } catch (const InvalidArgument& e) {
        throw ConfigError(root + ".emulators[" + std::to_string(i) + "]", e.what());
      }
    }
  }

  for (EmulatorKind k : kAllEmulatorKinds) c.train[k] = TrainConfig{};
  if (doc.contains("train")) {
    const json& t = doc["train"];
    check_keys(t, root + ".train", {"climatology", "pattern_scaling", "mlp"});
    for (EmulatorKind k : kAllEmulatorKinds) {
      const std::string name(to_string(k));
      if (!t.contains(name)) continue;
      const std::string path = root + ".train." + name;
      try {
        c.train[k] = train_config_from_json(t[name], path);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        throw ConfigError(path, e.what());
      }
    }
  }

  if (doc.contains("protocols")) {
    const auto names = string_list(doc["protocols"], root + ".protocols");
    std::string csv;
    for (std::size_t i = 0; i < names.size(); ++i) csv += (i ? "," : "") + names[i];
    if (names.empty()) throw ConfigError(root + ".protocols", "at least one protocol is required");
    c.protocols = parse_protocol_list(csv);
  }

  if (doc.contains("split")) {
    const json& s = doc["split"];
    const std::string path = root + ".split";
    check_keys(s, path, {"val_fraction", "train_last_year", "test_first_year", "test_last_year",
                         "rotation_keeps_ssp245"});
    read_opt(s, "val_fraction", path, c.split.val_fraction);
    read_opt(s, "train_last_year", path, c.split.train_last_year);
    read_opt(s, "test_first_year", path, c.split.test_first_year);
    read_opt(s, "test_last_year", path, c.split.test_last_year);
    read_opt(s, "rotation_keeps_ssp245", path, c.split.rotation_keeps_ssp245);
  }

  if (doc.contains("time_shift_test_scenarios")) {
    c.time_shift_test_scenarios = string_list(doc["time_shift_test_scenarios"], root + ".time_shift_test_scenarios");
  }
  read_opt(doc, "report_threshold", root, c.report_threshold);
  read_opt(doc, "output_dir", root, c.output_dir);

  validate_experiment(c);
  return c;
}

void validate_experiment(const ExperimentConfig& c) {
  const std::string root = "config";
  if (c.output_dir.empty()) throw ConfigError(root + ".output_dir", "must be non-empty");
  if (c.emulators.empty()) throw ConfigError(root + ".emulators", "at least one emulator is required");
  if (c.protocols.empty()) throw ConfigError(root + ".protocols", "at least one protocol is required");
  if (!std::isfinite(c.report_threshold)) throw ConfigError(root + ".report_threshold", "must be finite");
  if (!(c.split.val_fraction >= 0.0 && c.split.val_fraction < 1.0)) {
    throw ConfigError(root + ".split.val_fraction", "must lie in [0, 1)");
  }

  const auto& scenarios = c.generation.scenarios;
  const bool needs_all = std::find(c.protocols.begin(), c.protocols.end(), Protocol::baseline) != c.protocols.end() ||
                         std::find(c.protocols.begin(), c.protocols.end(), Protocol::ssp_rotation) != c.protocols.end();
  // The baseline is the reference for every percent change, so shifted
  // protocols need it too.
  for (Protocol p : c.protocols) {
    if (p != Protocol::baseline &&
        std::find(c.protocols.begin(), c.protocols.end(), Protocol::baseline) == c.protocols.end()) {
      throw ConfigError(root + ".protocols",
                        "protocol '" + std::string(to_string(p)) + "' requires the baseline protocol as reference");
    }
  }
  if (needs_all) {
    std::vector<std::string_view> required{kHistorical};
    required.insert(required.end(), kSspScenarios.begin(), kSspScenarios.end());
    for (std::string_view id : required) {
      if (!has_scenario(scenarios, id)) {
        throw ConfigError(root + ".scenarios", "protocol 'baseline' requires scenario '" + std::string(id) + "'");
      }
    }
  }
  if (std::find(c.protocols.begin(), c.protocols.end(), Protocol::time_shift) != c.protocols.end()) {
    if (c.time_shift_test_scenarios.empty()) {
      throw ConfigError(root + ".time_shift_test_scenarios", "at least one test scenario is required");
    }
    for (const std::string& id : c.time_shift_test_scenarios) {
      if (!has_scenario(scenarios, id)) {
        throw ConfigError(root + ".scenarios", "protocol 'time_shift' requires scenario '" + id + "'");
      }
    }
    if (c.split.train_last_year >= c.split.test_first_year || c.split.test_first_year > c.split.test_last_year) {
      throw ConfigError(root + ".split", "time-shift window must satisfy train_last_year < test_first_year <= test_last_year");
    }
  }

  try {
    validate_generation(c.generation);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(root + ".generation", e.what());
  }
  for (const auto& [kind, tc] : c.train) {
    try {
      validate_train_config(tc);
    } catch (const std::exception& e) {
      throw ConfigError(root + ".train." + std::string(to_string(kind)), e.what());
    }
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  json scenarios = json::array();
  for (const ScenarioSpec& s : c.generation.scenarios) {
    scenarios.push_back({{"id", s.id}, {"first_year", s.first_year}, {"last_year", s.last_year}});
  }
  json oracles = json::array();
  json table = json::array();
  for (const OracleSpec& o : c.generation.oracles) {
    oracles.push_back(o.id);
    table.push_back(oracle_to_json(o));
  }
  json emulators = json::array();
  for (EmulatorKind k : c.emulators) emulators.push_back(std::string(to_string(k)));
  json train = json::object();
  for (EmulatorKind k : c.emulators) train[std::string(to_string(k))] = to_json(c.train.at(k));
  json protocols = json::array();
  for (Protocol p : c.protocols) protocols.push_back(std::string(to_string(p)));
  return {{"seed", c.seed},
          {"grid", {{"n_lat", c.generation.n_lat}, {"n_lon", c.generation.n_lon}}},
          {"scenarios", scenarios},
          {"oracles", oracles},
          {"oracle_table", table},
          {"forcing", forcing_to_json(c.generation.forcing)},
          {"dtype", c.dtype == DType::f32 ? "f32" : "f64"},
          {"emulators", emulators},
          {"train", train},
          {"protocols", protocols},
          {"split",
           {{"val_fraction", c.split.val_fraction},
            {"train_last_year", c.split.train_last_year},
            {"test_first_year", c.split.test_first_year},
            {"test_last_year", c.split.test_last_year},
            {"rotation_keeps_ssp245", c.split.rotation_keeps_ssp245}}},
          {"time_shift_test_scenarios", c.time_shift_test_scenarios},
          {"report_threshold", c.report_threshold},
          {"output_dir", c.output_dir}};
}

}  // namespace climashift
