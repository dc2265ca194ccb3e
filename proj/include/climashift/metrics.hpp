#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "climashift/dataset.hpp"
#include "climashift/emulators.hpp"
#include "climashift/grid.hpp"

namespace climashift {

inline constexpr std::string_view kBaselineProtocol = "baseline";

/// One weighted-RMSE measurement of an emulator on a plan's test set.
struct EvalRecord {
  std::string emulator;
  std::string oracle;
  std::string protocol;
  std::string variable;
  double rmse = 0.0;
  std::size_t n_forecasts = 0;

  bool operator==(const EvalRecord&) const = default;
};

/// Weighted RMSE per output variable over every (chunk, month) forecast.
struct VariableRisk {
  std::array<double, kNumOutputs> rmse{};
  std::size_t n_forecasts = 0;  // per variable
};

VariableRisk evaluate_chunks(const Emulator& model, std::span<const ChunkView> chunks, const LatWeights& weights);

/// Empirical R_d(f) with the sqrt-then-mean weighted RMSE as the loss.
/// Throws ContractError for an empty domain.
double domain_risk(const Emulator& model, std::span<const ChunkView> domain, const LatWeights& weights,
                   OutputVar var);

struct Domain {
  std::string label;
  std::vector<ChunkView> chunks;
};

struct WorstCase {
  double risk = 0.0;
  std::string domain;
};

/// max_d R_d(f); ties go to the lexicographically smallest label.
WorstCase worst_case_risk(const Emulator& model, std::span<const Domain> domains, const LatWeights& weights,
                          OutputVar var);

/// 100 * (shift - base) / base; negative means the shifted run is better.
/// Throws ContractError unless base > 0.
double percent_change(double rmse_base, double rmse_shift);

/// Percent-change matrix: rows (emulator, variable), columns (oracle,
/// shift protocol), plus a cross-oracle mean per (row, protocol).
struct ResultsTable {
  struct Provenance {
    std::size_t baseline;  // indices into `records`
    std::size_t shifted;
  };

  std::vector<std::pair<std::string, std::string>> rows;
  std::vector<std::pair<std::string, std::string>> columns;
  std::vector<std::string> protocols;               // shift protocols, column order
  std::vector<std::optional<double>> cells;         // rows x columns; empty = missing record
  std::vector<std::optional<Provenance>> provenance;
  std::vector<std::optional<double>> means;         // rows x protocols
  std::vector<EvalRecord> records;                  // canonical order

  std::optional<double> cell(std::size_t row, std::size_t col) const { return cells[row * columns.size() + col]; }
  std::optional<double> mean(std::size_t row, std::size_t p) const { return means[row * protocols.size() + p]; }
};

/// Pure function of the record multiset. A cell whose baseline or shifted
/// record is missing throws CompletenessError, unless allow_missing, in which
/// case the cell is left empty (a failed training cell).
ResultsTable build_results_table(std::vector<EvalRecord> records, bool allow_missing = false);

/// Sorts records into the canonical (emulator, oracle, protocol, variable) order.
void sort_records(std::vector<EvalRecord>& records);

std::string records_to_csv(std::span<const EvalRecord> records);
/// Throws InvalidArgument naming the offending line.
std::vector<EvalRecord> records_from_csv(std::string_view text);

std::string table_to_csv(const ResultsTable& table);
/// Cells above `flag_threshold` percent are bold and listed below the table.
std::string table_to_markdown(const ResultsTable& table, double flag_threshold);
/// One aligned block per oracle plus the cross-oracle mean; flagged cells
/// carry a trailing '!'.
std::string table_to_text(const ResultsTable& table, double flag_threshold);

}  // namespace climashift
