#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "climashift/emulators.hpp"
#include "climashift/errors.hpp"
#include "climashift/metrics.hpp"
#include "test_support.hpp"

using namespace climashift;

namespace {

std::vector<EvalRecord> full_records() {
  std::vector<EvalRecord> r;
  for (const char* emu : {"climatology", "mlp"}) {
    for (const char* oracle : {"synth-b", "synth-a"}) {
      for (const char* proto : {"baseline", "time_shift", "ssp_holdout_ssp585"}) {
        for (const char* var : {"PR", "TAS"}) {
          const double base = 1.0 + (std::string(var) == "TAS");
          const double rmse = std::string(proto) == "baseline" ? base : base * (std::string(oracle) == "synth-a" ? 1.25 : 0.9);
          r.push_back(EvalRecord{emu, oracle, proto, var, rmse, 12});
        }
      }
    }
  }
  return r;
}

}  // namespace

TEST(PercentChange, Examples) {
  EXPECT_DOUBLE_EQ(percent_change(2.0, 2.5), 25.0);
  EXPECT_DOUBLE_EQ(percent_change(2.0, 1.5), -25.0);
  EXPECT_DOUBLE_EQ(percent_change(3.0, 3.0), 0.0);
  EXPECT_THROW(percent_change(0.0, 1.0), ContractError);
  EXPECT_THROW(percent_change(-1.0, 1.0), ContractError);
}

TEST(Risk, DomainAndWorstCase) {
  const GridSpec g = build_grid(2, 2);
  const std::size_t n = 12 * kNumOutputs * g.cells();
  // Climatology fitted on zeros predicts zero, so the risk is the RMSE of the truth.
  std::vector<double> zeros_in(12 * kNumForcers * g.cells(), 0.0), zeros_out(n, 0.0);
  std::vector<double> ones(n, 1.0), twos(n, 2.0);
  const ChunkView fit{{"o", "fit", 0}, zeros_in, zeros_out};
  const auto model = fit_climatology(std::vector<ChunkView>{fit}, g);
  const LatWeights w = lat_weights(g);
  std::vector<Domain> domains{{"b", {ChunkView{{"o", "b", 0}, zeros_in, twos}}},
                              {"a", {ChunkView{{"o", "a", 0}, zeros_in, twos}}},
                              {"c", {ChunkView{{"o", "c", 0}, zeros_in, ones}}}};
  EXPECT_NEAR(domain_risk(*model, domains[2].chunks, w, OutputVar::TAS), 1.0, 1e-14);
  const WorstCase wc = worst_case_risk(*model, domains, w, OutputVar::PR);
  EXPECT_NEAR(wc.risk, 2.0, 1e-14);
  EXPECT_EQ(wc.domain, "a");
  EXPECT_THROW(domain_risk(*model, {}, w, OutputVar::TAS), ContractError);
  const VariableRisk vr = evaluate_chunks(*model, domains[0].chunks, w);
  EXPECT_EQ(vr.n_forecasts, 12u);
}

TEST(ResultsTable, LayoutAndValues) {
  const ResultsTable t = build_results_table(full_records());
  ASSERT_EQ(t.rows.size(), 4u);
  EXPECT_EQ(t.rows[0], (std::pair<std::string, std::string>{"climatology", "TAS"}));
  EXPECT_EQ(t.rows[1], (std::pair<std::string, std::string>{"climatology", "PR"}));
  EXPECT_EQ(t.protocols, (std::vector<std::string>{"time_shift", "ssp_holdout_ssp585"}));
  ASSERT_EQ(t.columns.size(), 4u);
  EXPECT_EQ(t.columns[0].first, "synth-a");
  EXPECT_NEAR(*t.cell(0, 0), 25.0, 1e-12);
  EXPECT_NEAR(*t.cell(0, 2), -10.0, 1e-12);
  EXPECT_NEAR(*t.mean(0, 0), 7.5, 1e-12);
  const auto prov = *t.provenance[0];
  EXPECT_EQ(t.records[prov.baseline].protocol, "baseline");
  EXPECT_EQ(t.records[prov.shifted].protocol, "time_shift");
  EXPECT_EQ(t.records[prov.shifted].oracle, "synth-a");
}

TEST(ResultsTable, PermutationInvariant) {
  auto records = full_records();
  const std::string csv = table_to_csv(build_results_table(records));
  std::mt19937_64 gen(3);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(records.begin(), records.end(), gen);
    EXPECT_EQ(table_to_csv(build_results_table(records)), csv);
  }
}

TEST(ResultsTable, MissingBaseline) {
  auto records = full_records();
  records.erase(std::find_if(records.begin(), records.end(), [](const EvalRecord& r) { return r.protocol == "baseline"; }));
  EXPECT_THROW(build_results_table(records), CompletenessError);
  // Without its reference, every shifted cell of that (emulator, oracle, variable) is empty.
  const ResultsTable t = build_results_table(records, true);
  EXPECT_EQ(std::count(t.cells.begin(), t.cells.end(), std::nullopt), 2);
}

TEST(ResultsTable, MissingShiftedRecord) {
  auto records = full_records();
  records.erase(std::find_if(records.begin(), records.end(), [](const EvalRecord& r) { return r.protocol == "time_shift"; }));
  EXPECT_THROW(build_results_table(records), CompletenessError);
  const ResultsTable t = build_results_table(records, true);
  const auto missing = std::count(t.cells.begin(), t.cells.end(), std::nullopt);
  EXPECT_EQ(missing, 1);
  EXPECT_NE(table_to_csv(t).find("NA"), std::string::npos);
}

TEST(ResultsTable, DuplicateRecordThrows) {
  auto records = full_records();
  records.push_back(records.front());
  EXPECT_THROW(build_results_table(records), CompletenessError);
}

TEST(RecordsCsv, RoundTripIsExact) {
  auto records = full_records();
  records[0].rmse = 0.1 + 0.2;
  sort_records(records);
  const auto back = records_from_csv(records_to_csv(records));
  EXPECT_EQ(back, records);
}

TEST(RecordsCsv, RejectsBadInput) {
  EXPECT_THROW(records_from_csv(""), InvalidArgument);
  EXPECT_THROW(records_from_csv("emulator,oracle,protocol,variable,rmse,n_forecasts\n"), InvalidArgument);
  EXPECT_THROW(records_from_csv("emulator,oracle,protocol,variable,rmse,n_forecasts\na,b,c,d,x,1\n"), InvalidArgument);
  EXPECT_THROW(records_from_csv("emulator,oracle,protocol,variable,rmse,n_forecasts\na,b,c,d,1.0\n"), InvalidArgument);
  EXPECT_THROW(records_from_csv("nope\n"), InvalidArgument);
}

TEST(Report, FlagsCellsAboveThreshold) {
  const ResultsTable t = build_results_table(full_records());
  const std::string md = table_to_markdown(t, 20.0);
  EXPECT_NE(md.find("**+25.00**"), std::string::npos);
  EXPECT_EQ(md.find("**-10.00**"), std::string::npos);
  EXPECT_NE(md.find("Flagged cells"), std::string::npos);
  const std::string text = table_to_text(t, 20.0);
  EXPECT_NE(text.find("+25.00!"), std::string::npos);
  EXPECT_NE(text.find("mean over oracles"), std::string::npos);
  EXPECT_EQ(table_to_markdown(t, 30.0).find("**+25.00**"), std::string::npos);
}
