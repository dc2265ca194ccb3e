#include "climashift/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "climashift/errors.hpp"

namespace climashift {

VariableRisk evaluate_chunks(const Emulator& model, std::span<const ChunkView> chunks, const LatWeights& weights) {
  if (chunks.empty()) throw ContractError("cannot evaluate an empty chunk set");
  const GridSpec& grid = model.grid();
  const std::size_t cells = grid.cells();
  std::vector<double> pred(model.output_size());
  VariableRisk out;
  for (const ChunkView& c : chunks) {
    if (c.outputs.size() != model.output_size()) throw ContractError("chunk outputs do not match the emulator grid");
    model.predict_into(c.inputs, pred);
    for (std::size_t m = 0; m < kMonthsPerYear; ++m) {
      for (std::size_t v = 0; v < kNumOutputs; ++v) {
        const std::size_t off = (m * kNumOutputs + v) * cells;
        out.rmse[v] += std::sqrt(field_weighted_mse(std::span<const double>(pred).subspan(off, cells),
                                                    c.outputs.subspan(off, cells), grid, weights));
      }
    }
  }
  out.n_forecasts = chunks.size() * kMonthsPerYear;
  for (double& r : out.rmse) r /= static_cast<double>(out.n_forecasts);
  return out;
}

double domain_risk(const Emulator& model, std::span<const ChunkView> domain, const LatWeights& weights,
                   OutputVar var) {
  if (domain.empty()) throw ContractError("domain has no chunks");
  return evaluate_chunks(model, domain, weights).rmse[static_cast<std::size_t>(var)];
}

WorstCase worst_case_risk(const Emulator& model, std::span<const Domain> domains, const LatWeights& weights,
                          OutputVar var) {
  if (domains.empty()) throw ContractError("worst-case risk needs at least one domain");
  std::optional<WorstCase> best;
  for (const Domain& d : domains) {
    const double r = domain_risk(model, d.chunks, weights, var);
    if (!best || r > best->risk || (r == best->risk && d.label < best->domain)) best = WorstCase{r, d.label};
  }
  return *best;
}

double percent_change(double rmse_base, double rmse_shift) {
  if (!(rmse_base > 0.0)) throw ContractError("baseline RMSE must be positive");
  return 100.0 * (rmse_shift - rmse_base) / rmse_base;
}

namespace {

int emulator_rank(const std::string& name) {
  for (std::size_t i = 0; i < kAllEmulatorKinds.size(); ++i) {
    if (to_string(kAllEmulatorKinds[i]) == name) return static_cast<int>(i);
  }
  return static_cast<int>(kAllEmulatorKinds.size());
}

int variable_rank(const std::string& name) {
  for (std::size_t i = 0; i < kOutputNames.size(); ++i) {
    if (kOutputNames[i] == name) return static_cast<int>(i);
  }
  return static_cast<int>(kOutputNames.size());
}

int protocol_rank(const std::string& name) {
  if (name == kBaselineProtocol) return 0;
  if (name == "time_shift") return 1;
  return 2;
}

auto record_key(const EvalRecord& r) {
  return std::make_tuple(emulator_rank(r.emulator), r.emulator, r.oracle, protocol_rank(r.protocol), r.protocol,
                         variable_rank(r.variable), r.variable);
}

auto row_key(const std::pair<std::string, std::string>& row) {
  return std::make_tuple(emulator_rank(row.first), row.first, variable_rank(row.second), row.second);
}

bool protocol_less(const std::string& a, const std::string& b) {
  return std::make_tuple(protocol_rank(a), a) < std::make_tuple(protocol_rank(b), b);
}

std::string format_pct(double v) { return fmt::format("{:+.2f}", v); }

}  // namespace

void sort_records(std::vector<EvalRecord>& records) {
  std::sort(records.begin(), records.end(), [](const EvalRecord& a, const EvalRecord& b) {
    return std::make_tuple(record_key(a), a.rmse, a.n_forecasts) < std::make_tuple(record_key(b), b.rmse, b.n_forecasts);
  });
}

ResultsTable build_results_table(std::vector<EvalRecord> records, bool allow_missing) {
  sort_records(records);
  ResultsTable table;
  table.records = std::move(records);

  using Key = std::tuple<std::string, std::string, std::string, std::string>;  // emulator, oracle, protocol, variable
  std::map<Key, std::size_t> index;
  std::set<std::pair<std::string, std::string>> rows;
  std::set<std::string> oracles;
  std::set<std::string> protocols;
  for (std::size_t i = 0; i < table.records.size(); ++i) {
    const EvalRecord& r = table.records[i];
    if (!index.emplace(Key{r.emulator, r.oracle, r.protocol, r.variable}, i).second) {
      throw CompletenessError("duplicate record for (" + r.emulator + ", " + r.oracle + ", " + r.protocol + ", " +
                              r.variable + ")");
    }
    rows.insert({r.emulator, r.variable});
    oracles.insert(r.oracle);
    if (r.protocol != kBaselineProtocol) protocols.insert(r.protocol);
  }
  table.rows.assign(rows.begin(), rows.end());
  std::sort(table.rows.begin(), table.rows.end(), [](const auto& a, const auto& b) { return row_key(a) < row_key(b); });
  table.protocols.assign(protocols.begin(), protocols.end());
  std::sort(table.protocols.begin(), table.protocols.end(), protocol_less);
  for (const std::string& o : oracles) {
    for (const std::string& p : table.protocols) table.columns.emplace_back(o, p);
  }

  table.cells.assign(table.rows.size() * table.columns.size(), std::nullopt);
  table.provenance.assign(table.cells.size(), std::nullopt);
  for (std::size_t ri = 0; ri < table.rows.size(); ++ri) {
    const auto& [emulator, variable] = table.rows[ri];
    for (std::size_t ci = 0; ci < table.columns.size(); ++ci) {
      const auto& [oracle, protocol] = table.columns[ci];
      const std::string cell_name = "(" + emulator + ", " + variable + ") x (" + oracle + ", " + protocol + ")";
      auto base = index.find(Key{emulator, oracle, std::string(kBaselineProtocol), variable});
      auto shifted = index.find(Key{emulator, oracle, protocol, variable});
      if (base == index.end() || shifted == index.end()) {
        if (!allow_missing) {
          throw CompletenessError(std::string(base == index.end() ? "missing baseline record" : "missing record") +
                                  " for cell " + cell_name);
        }
        continue;
      }
      const std::size_t at = ri * table.columns.size() + ci;
      table.cells[at] = percent_change(table.records[base->second].rmse, table.records[shifted->second].rmse);
      table.provenance[at] = ResultsTable::Provenance{base->second, shifted->second};
    }
  }

  table.means.assign(table.rows.size() * table.protocols.size(), std::nullopt);
  for (std::size_t ri = 0; ri < table.rows.size(); ++ri) {
    for (std::size_t pi = 0; pi < table.protocols.size(); ++pi) {
      double sum = 0.0;
      std::size_t n = 0;
      bool complete = true;
      for (std::size_t ci = 0; ci < table.columns.size(); ++ci) {
        if (table.columns[ci].second != table.protocols[pi]) continue;
        const auto v = table.cell(ri, ci);
        if (!v) {
          complete = false;
          break;
        }
        sum += *v;
        ++n;
      }
      if (complete && n > 0) table.means[ri * table.protocols.size() + pi] = sum / static_cast<double>(n);
    }
  }
  return table;
}

std::string records_to_csv(std::span<const EvalRecord> records) {
  std::string out = "emulator,oracle,protocol,variable,rmse,n_forecasts\n";
  for (const EvalRecord& r : records) {
    out += fmt::format("{},{},{},{},{:.17g},{}\n", r.emulator, r.oracle, r.protocol, r.variable, r.rmse, r.n_forecasts);
  }
  return out;
}

std::vector<EvalRecord> records_from_csv(std::string_view text) {
  std::vector<EvalRecord> out;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "emulator,oracle,protocol,variable,rmse,n_forecasts") {
        throw InvalidArgument("records line 1: unexpected header");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    const std::string where = "records line " + std::to_string(line_no);
    if (fields.size() != 6) throw InvalidArgument(where + ": expected 6 fields");
    EvalRecord r{std::string(fields[0]), std::string(fields[1]), std::string(fields[2]), std::string(fields[3]), 0.0, 0};
    if (r.emulator.empty() || r.oracle.empty() || r.protocol.empty() || r.variable.empty()) {
      throw InvalidArgument(where + ": empty label");
    }
    auto [p1, e1] = std::from_chars(fields[4].data(), fields[4].data() + fields[4].size(), r.rmse);
    if (e1 != std::errc{} || p1 != fields[4].data() + fields[4].size() || !std::isfinite(r.rmse) || r.rmse < 0.0) {
      throw InvalidArgument(where + ": bad rmse '" + std::string(fields[4]) + "'");
    }
    auto [p2, e2] = std::from_chars(fields[5].data(), fields[5].data() + fields[5].size(), r.n_forecasts);
    if (e2 != std::errc{} || p2 != fields[5].data() + fields[5].size() || r.n_forecasts < 1) {
      throw InvalidArgument(where + ": bad n_forecasts '" + std::string(fields[5]) + "'");
    }
    out.push_back(std::move(r));
  }
  if (!header_seen) throw InvalidArgument("records file is empty");
  if (out.empty()) throw InvalidArgument("records file has no records");
  return out;
}

std::string table_to_csv(const ResultsTable& t) {
  std::string out = "emulator,variable";
  for (const auto& [oracle, protocol] : t.columns) out += "," + oracle + ":" + protocol;
  for (const std::string& p : t.protocols) out += ",mean:" + p;
  out += "\n";
  for (std::size_t ri = 0; ri < t.rows.size(); ++ri) {
    out += t.rows[ri].first + "," + t.rows[ri].second;
    for (std::size_t ci = 0; ci < t.columns.size(); ++ci) {
      const auto v = t.cell(ri, ci);
      out += v ? fmt::format(",{:.6f}", *v) : ",NA";
    }
    for (std::size_t pi = 0; pi < t.protocols.size(); ++pi) {
      const auto v = t.mean(ri, pi);
      out += v ? fmt::format(",{:.6f}", *v) : ",NA";
    }
    out += "\n";
  }
  return out;
}

std::string table_to_markdown(const ResultsTable& t, double flag_threshold) {
  std::string out = "# Percent change in weighted RMSE relative to baseline\n\n";
  out += "Negative values mean the shifted run beat the baseline. ";
  out += fmt::format("Cells above {:+.2f}% are bold.\n\n", flag_threshold);
  out += "| emulator | variable |";
  for (const auto& [oracle, protocol] : t.columns) out += " " + oracle + "<br>" + protocol + " |";
  for (const std::string& p : t.protocols) out += " mean<br>" + p + " |";
  out += "\n|---|---|";
  for (std::size_t i = 0; i < t.columns.size() + t.protocols.size(); ++i) out += "---:|";
  out += "\n";
  std::vector<std::string> flagged;
  auto render = [&](std::optional<double> v) -> std::string {
    if (!v) return "FAILED";
    return *v > flag_threshold ? "**" + format_pct(*v) + "**" : format_pct(*v);
  };
  for (std::size_t ri = 0; ri < t.rows.size(); ++ri) {
    out += "| " + t.rows[ri].first + " | " + t.rows[ri].second + " |";
    for (std::size_t ci = 0; ci < t.columns.size(); ++ci) {
      const auto v = t.cell(ri, ci);
      out += " " + render(v) + " |";
      if (v && *v > flag_threshold) {
        flagged.push_back(fmt::format("- {} / {} on {} under {}: {}%", t.rows[ri].first, t.rows[ri].second,
                                      t.columns[ci].first, t.columns[ci].second, format_pct(*v)));
      }
    }
    for (std::size_t pi = 0; pi < t.protocols.size(); ++pi) out += " " + render(t.mean(ri, pi)) + " |";
    out += "\n";
  }
  out += fmt::format("\n## Flagged cells (> {:+.2f}%)\n\n", flag_threshold);
  if (flagged.empty()) out += "None.\n";
  for (const std::string& f : flagged) out += f + "\n";
  return out;
}

std::string table_to_text(const ResultsTable& t, double flag_threshold) {
  std::vector<std::string> blocks;
  std::set<std::string> oracle_set;
  for (const auto& c : t.columns) oracle_set.insert(c.first);
  std::vector<std::string> oracles(oracle_set.begin(), oracle_set.end());
  oracles.push_back("");  // cross-oracle mean

  std::size_t label_w = 0;
  for (const auto& r : t.rows) label_w = std::max(label_w, r.first.size() + 1 + r.second.size());
  std::size_t col_w = 9;
  for (const std::string& p : t.protocols) col_w = std::max(col_w, p.size());

  std::string out;
  for (const std::string& oracle : oracles) {
    out += oracle.empty() ? "mean over oracles\n" : "oracle " + oracle + "\n";
    out += fmt::format("  {:<{}}", "", label_w);
    for (const std::string& p : t.protocols) out += fmt::format("  {:>{}}", p, col_w + 1);
    out += "\n";
    for (std::size_t ri = 0; ri < t.rows.size(); ++ri) {
      out += fmt::format("  {:<{}}", t.rows[ri].first + " " + t.rows[ri].second, label_w);
      for (std::size_t pi = 0; pi < t.protocols.size(); ++pi) {
        std::optional<double> v;
        if (oracle.empty()) {
          v = t.mean(ri, pi);
        } else {
          for (std::size_t ci = 0; ci < t.columns.size(); ++ci) {
            if (t.columns[ci].first == oracle && t.columns[ci].second == t.protocols[pi]) v = t.cell(ri, ci);
          }
        }
        std::string s = v ? format_pct(*v) + (*v > flag_threshold ? "!" : " ") : "FAILED ";
        out += fmt::format("  {:>{}}", s, col_w + 1);
      }
      out += "\n";
    }
    out += "\n";
  }
  out += fmt::format("'!' marks a percent change above {:+.2f}%\n", flag_threshold);
  return out;
}

}  // namespace climashift
