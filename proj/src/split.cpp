#include "climashift/split.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "climashift/errors.hpp"
#include "climashift/rng.hpp"

namespace climashift {

using nlohmann::json;

namespace {

const ScenarioSpec& require_scenario(const DatasetLayout& layout, std::string_view id, std::string_view plan) {
  const ScenarioSpec* s = layout.find_scenario(id);
  if (s == nullptr) {
    throw ConfigError("config.scenarios",
                      "plan '" + std::string(plan) + "' requires scenario '" + std::string(id) + "'");
  }
  return *s;
}

void require_oracle(const DatasetLayout& layout, std::string_view oracle) {
  if (!layout.has_oracle(oracle)) throw ConfigError("config.oracles", "unknown oracle '" + std::string(oracle) + "'");
}

void append_years(std::vector<ChunkKey>& out, std::string_view oracle, const ScenarioSpec& s, int first, int last) {
  for (int y = std::max(first, s.first_year); y <= std::min(last, s.last_year); ++y) {
    out.push_back(ChunkKey{std::string(oracle), s.id, y});
  }
}

// Splits `pool` into (train, val) with |val| = floor(fraction * |pool|).
void draw_validation(std::vector<ChunkKey> pool, double fraction, std::uint64_t seed, SplitPlan& plan) {
  std::sort(pool.begin(), pool.end());
  const std::size_t n = pool.size();
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  Pcg32 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.bounded(static_cast<std::uint32_t>(n - i));
    std::swap(pool[i], pool[j]);
  }
  plan.val.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
  plan.train.assign(pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end());
  std::sort(plan.val.begin(), plan.val.end());
  std::sort(plan.train.begin(), plan.train.end());
}

void fill_domains(SplitPlan& plan) {
  std::set<std::string> train;
  std::set<std::string> all;
  for (const auto& k : plan.train) train.insert(k.scenario);
  all = train;
  for (const auto& k : plan.val) all.insert(k.scenario);
  for (const auto& k : plan.test) all.insert(k.scenario);
  plan.domains_train.assign(train.begin(), train.end());
  plan.domains_all.assign(all.begin(), all.end());
}

std::uint64_t plan_seed(std::uint64_t seed, std::string_view plan, std::string_view oracle) {
  return derive_seed(seed, {"split", plan, oracle});
}

SplitPlan pooled_plan(const DatasetLayout& layout, std::string_view oracle, std::string name,
                      const std::vector<std::string_view>& pool_scenarios, std::string_view test_scenario,
                      std::uint64_t seed, const SplitOptions& options) {
  require_oracle(layout, oracle);
  SplitPlan plan;
  plan.name = std::move(name);
  plan.oracle = std::string(oracle);
  std::vector<ChunkKey> pool;
  for (std::string_view id : pool_scenarios) {
    const ScenarioSpec& s = require_scenario(layout, id, plan.name);
    append_years(pool, oracle, s, s.first_year, s.last_year);
  }
  const ScenarioSpec& test = require_scenario(layout, test_scenario, plan.name);
  append_years(plan.test, oracle, test, test.first_year, test.last_year);
  draw_validation(std::move(pool), options.val_fraction, plan_seed(seed, plan.name, oracle), plan);
  fill_domains(plan);
  return plan;
}

}  // namespace

std::string ssp_holdout_plan_name(std::string_view scenario) { return "ssp_holdout_" + std::string(scenario); }

SplitPlan baseline_split(const DatasetLayout& layout, std::string_view oracle, std::uint64_t seed,
                         const SplitOptions& options) {
  return pooled_plan(layout, oracle, std::string(kBaselinePlan), {kHistorical, "ssp126", "ssp370", "ssp585"}, "ssp245",
                     seed, options);
}

SplitPlan time_domain_split(const DatasetLayout& layout, std::string_view oracle,
                            const std::vector<std::string>& test_scenarios, std::uint64_t seed,
                            const SplitOptions& options) {
  if (test_scenarios.empty()) throw ConfigError("config.time_shift_test_scenarios", "must not be empty");
  require_oracle(layout, oracle);
  SplitPlan plan;
  plan.name = std::string(kTimeShiftPlan);
  plan.oracle = std::string(oracle);
  std::vector<ChunkKey> pool;
  for (const ScenarioSpec& s : layout.scenarios) {
    append_years(pool, oracle, s, s.first_year, options.train_last_year);
  }
  if (pool.empty()) throw ConfigError("config.scenarios", "no chunks before the time-shift cut-off");
  for (const std::string& id : test_scenarios) {
    const ScenarioSpec& s = require_scenario(layout, id, plan.name);
    if (!s.covers(options.test_first_year) || !s.covers(options.test_last_year)) {
      throw ConfigError("config.time_shift_test_scenarios",
                        "scenario '" + id + "' does not cover " + std::to_string(options.test_first_year) + "-" +
                            std::to_string(options.test_last_year));
    }
    append_years(plan.test, oracle, s, options.test_first_year, options.test_last_year);
  }
  std::sort(plan.test.begin(), plan.test.end());
  plan.test.erase(std::unique(plan.test.begin(), plan.test.end()), plan.test.end());
  draw_validation(std::move(pool), options.val_fraction, plan_seed(seed, plan.name, oracle), plan);
  fill_domains(plan);
  return plan;
}

std::vector<SplitPlan> rotate_ssp_splits(const DatasetLayout& layout, std::string_view oracle, std::uint64_t seed,
                                         const SplitOptions& options) {
  for (std::string_view id : kSspScenarios) require_scenario(layout, id, "ssp_rotation");
  require_scenario(layout, kHistorical, "ssp_rotation");
  std::vector<SplitPlan> plans;
  for (std::string_view held_out : {"ssp126", "ssp370", "ssp585"}) {
    std::vector<std::string_view> pool{kHistorical};
    for (std::string_view ssp : kSspScenarios) {
      if (ssp == held_out) continue;
      if (ssp == "ssp245" && !options.rotation_keeps_ssp245) continue;
      pool.push_back(ssp);
    }
    plans.push_back(pooled_plan(layout, oracle, ssp_holdout_plan_name(held_out), pool, held_out, seed, options));
  }
  return plans;
}

std::vector<SplitViolation> verify_split(const SplitPlan& plan, const DatasetLayout& layout) {
  std::vector<SplitViolation> out;
  auto check_set = [&](const std::vector<ChunkKey>& keys, std::string_view set_name) {
    std::set<ChunkKey> seen;
    for (const ChunkKey& k : keys) {
      if (!seen.insert(k).second) {
        out.push_back({ViolationKind::duplicate, k, "duplicate " + to_string(k) + " in " + std::string(set_name)});
      }
      const ScenarioSpec* s = layout.find_scenario(k.scenario);
      if (!layout.has_oracle(k.oracle) || s == nullptr || !s->covers(k.year)) {
        out.push_back({ViolationKind::outside_universe, k,
                       to_string(k) + " in " + std::string(set_name) + " is not a chunk of the dataset"});
      }
    }
  };
  check_set(plan.train, "train");
  check_set(plan.val, "val");
  check_set(plan.test, "test");

  auto check_pair = [&](const std::vector<ChunkKey>& a, std::string_view an, const std::vector<ChunkKey>& b,
                        std::string_view bn) {
    const std::set<ChunkKey> sa(a.begin(), a.end());
    const std::set<ChunkKey> sb(b.begin(), b.end());
    for (const ChunkKey& k : sa) {
      if (sb.count(k) != 0) {
        out.push_back({ViolationKind::overlap, k,
                       to_string(k) + " appears in both " + std::string(an) + " and " + std::string(bn)});
      }
    }
  };
  check_pair(plan.train, "train", plan.val, "val");
  check_pair(plan.train, "train", plan.test, "test");
  check_pair(plan.val, "val", plan.test, "test");

  if (plan.test.empty()) out.push_back({ViolationKind::empty_test, {}, "plan '" + plan.name + "' has an empty test set"});
  return out;
}

namespace {

json keys_to_json(const std::vector<ChunkKey>& keys) {
  std::vector<ChunkKey> sorted = keys;
  std::sort(sorted.begin(), sorted.end());
  json arr = json::array();
  for (const ChunkKey& k : sorted) arr.push_back({{"oracle", k.oracle}, {"scenario", k.scenario}, {"year", k.year}});
  return arr;
}

std::vector<ChunkKey> keys_from_json(const json& arr) {
  std::vector<ChunkKey> out;
  for (const json& k : arr) {
    out.push_back(ChunkKey{k.at("oracle").get<std::string>(), k.at("scenario").get<std::string>(), k.at("year").get<int>()});
  }
  return out;
}

}  // namespace

json to_json(const SplitPlan& plan) {
  return json{{"name", plan.name},
              {"oracle", plan.oracle},
              {"domains_train", plan.domains_train},
              {"domains_all", plan.domains_all},
              {"counts", {{"train", plan.train.size()}, {"val", plan.val.size()}, {"test", plan.test.size()}}},
              {"train", keys_to_json(plan.train)},
              {"val", keys_to_json(plan.val)},
              {"test", keys_to_json(plan.test)}};
}

SplitPlan split_from_json(const json& doc) {
  SplitPlan plan;
  plan.name = doc.at("name").get<std::string>();
  plan.oracle = doc.at("oracle").get<std::string>();
  plan.domains_train = doc.at("domains_train").get<std::vector<std::string>>();
  plan.domains_all = doc.at("domains_all").get<std::vector<std::string>>();
  plan.train = keys_from_json(doc.at("train"));
  plan.val = keys_from_json(doc.at("val"));
  plan.test = keys_from_json(doc.at("test"));
  return plan;
}

}  // namespace climashift
