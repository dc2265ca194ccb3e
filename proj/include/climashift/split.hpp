#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "climashift/dataset.hpp"

namespace climashift {

/// Disjoint train/validation/test chunk sets for one oracle.
/// Key lists are kept sorted by (oracle, scenario, year).
struct SplitPlan {
  std::string name;  // "baseline", "time_shift", "ssp_holdout_<scenario>"
  std::string oracle;
  std::vector<ChunkKey> train;
  std::vector<ChunkKey> val;
  std::vector<ChunkKey> test;
  std::vector<std::string> domains_train;  // scenarios seen in training
  std::vector<std::string> domains_all;    // scenarios covered by any set

  bool operator==(const SplitPlan&) const = default;
};

struct SplitOptions {
  double val_fraction = 0.10;
  // Time-domain shift window.
  int train_last_year = 2014;
  int test_first_year = 2015;
  int test_last_year = 2023;
  // When an SSP is held out, ssp245 takes its place in the training pool.
  bool rotation_keeps_ssp245 = true;
};

inline constexpr std::string_view kBaselinePlan = "baseline";
inline constexpr std::string_view kTimeShiftPlan = "time_shift";
std::string ssp_holdout_plan_name(std::string_view scenario);

/// Pool = historical, ssp126, ssp370, ssp585; val = floor(10%) of the pool by
/// seeded partial Fisher-Yates over chunks sorted by (scenario, year);
/// test = every ssp245 chunk. Throws ConfigError when a scenario is missing.
SplitPlan baseline_split(const DatasetLayout& layout, std::string_view oracle, std::uint64_t seed,
                         const SplitOptions& options = {});

/// Train on every chunk up to train_last_year (minus a seeded validation
/// draw), test on the [test_first_year, test_last_year] slice of each test
/// scenario.
SplitPlan time_domain_split(const DatasetLayout& layout, std::string_view oracle,
                            const std::vector<std::string>& test_scenarios, std::uint64_t seed,
                            const SplitOptions& options = {});

/// Three plans holding out ssp126, ssp370 and ssp585 in turn.
std::vector<SplitPlan> rotate_ssp_splits(const DatasetLayout& layout, std::string_view oracle, std::uint64_t seed,
                                         const SplitOptions& options = {});

enum class ViolationKind { overlap, outside_universe, empty_test, duplicate };

struct SplitViolation {
  ViolationKind kind;
  ChunkKey key;  // empty for empty_test
  std::string message;
};

/// Every violation found, not just the first. Empty means the plan is valid.
std::vector<SplitViolation> verify_split(const SplitPlan& plan, const DatasetLayout& layout);

nlohmann::json to_json(const SplitPlan& plan);
SplitPlan split_from_json(const nlohmann::json& doc);

}  // namespace climashift
