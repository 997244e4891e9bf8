// Copyright 2026 The Spillover Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spillover/config.hpp"
#include "spillover/errors.hpp"
#include "spillover/graph.hpp"
#include "spillover/oracle.hpp"
#include "spillover/studies.hpp"
#include "spillover/table_io.hpp"

namespace {

using namespace spillover;
using nlohmann::json;

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;
constexpr int kExitFailed = 1;

struct CommonOptions {
  std::string config = "-";
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_config = true) {
  if (with_config) cmd->add_option("--config", o.config, "JSON config path, '-' for stdin");
  cmd->add_option("--seed", o.seed, "Master seed (overrides the config)");
  cmd->add_option("--out", o.out, "Output path (default: config output, else stdout)");
  cmd->add_option("--threads", o.threads, "Worker threads (fallback: SPILLOVER_LAB_THREADS)");
}

SimulationConfig read_config(const CommonOptions& o) {
  SimulationConfig c;
  if (o.config == "-") {
    c = load_config(std::cin);
  } else {
    std::ifstream in(o.config);
    if (!in) throw IoError("cannot open config '" + o.config + "'");
    c = load_config(in);
  }
  if (o.seed) c.seed = *o.seed;
  return c;
}

std::string output_path(const CommonOptions& o, const std::optional<std::string>& from_config) {
  if (!o.out.empty()) return o.out;
  return from_config.value_or("");
}

// Writes `text` to the path, or stdout when the path is empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::size_t parse_bins(const std::string& text) {
  std::string value = text;
  if (value.rfind("bins=", 0) == 0) value = value.substr(5);
  std::size_t pos = 0;
  unsigned long bins = 0;
  try {
    bins = std::stoul(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != value.size() || bins == 0) throw ValidationError("--emit-hist expects bins=<positive integer>");
  return bins;
}

// Histogram goes next to the table: "<out>.hist.csv", or after a blank line on stdout.
void emit_with_histogram(const std::string& path, const std::string& table,
                         const std::optional<std::vector<HistogramBin>>& bins) {
  if (!bins) {
    emit(path, table);
    return;
  }
  std::ostringstream hist;
  write_histogram_csv(hist, *bins);
  if (path.empty() || path == "-") {
    emit("", table + "\n" + hist.str());
  } else {
    emit(path, table);
    emit(path + ".hist.csv", hist.str());
  }
}

int cmd_graph(const CommonOptions& o) {
  const SimulationConfig c = read_config(o);
  const InterferenceGraph g = generate_graph(c, replicate_seed(c.seed, 0));
  std::ostringstream out;
  write_edge_list(out, g);
  emit(output_path(o, c.output), out.str());
  return 0;
}

int cmd_simulate(const CommonOptions& o, const std::string& graph_out) {
  const SimulationConfig c = read_config(o);
  const std::size_t threads = resolve_threads(o.threads);
  std::vector<std::vector<UnitRow>> per_rep(c.replications);
  std::optional<InterferenceGraph> first_graph;
  parallel_for(c.replications, threads, [&](std::size_t r) {
    const std::uint64_t seed = replicate_seed(c.seed, r);
    const World w = generate_world(c, seed);
    for (std::size_t i = 0; i < c.n; ++i) {
      per_rep[r].push_back({r, seed, i, w.x[i], w.y[static_cast<Eigen::Index>(i)]});
    }
    if (r == 0) first_graph = w.graph;
  });
  std::vector<UnitRow> rows;
  for (auto& rep : per_rep) rows.insert(rows.end(), rep.begin(), rep.end());
  std::ostringstream out;
  write_simulate_csv(out, rows);
  emit(output_path(o, c.output), out.str());
  if (!graph_out.empty()) {
    std::ostringstream g;
    write_edge_list(g, *first_graph);
    emit(graph_out, g.str());
  }
  return 0;
}

int cmd_estimate(const CommonOptions& o, const std::string& data_path, const std::string& graph_path) {
  const SimulationConfig c = read_config(o);
  if (data_path.empty() != graph_path.empty()) {
    throw ValidationError("--data and --graph must be given together");
  }
  json result;
  if (data_path.empty()) {
    result = run_estimate_study(c, resolve_threads(o.threads));
  } else {
    const InterferenceGraph graph = read_edge_list(graph_path);
    std::ifstream in(data_path);
    if (!in) throw IoError("cannot open data '" + data_path + "'");
    const std::vector<UnitRow> rows = read_simulate_csv(in);
    std::map<std::size_t, std::vector<UnitRow>> by_rep;
    for (const UnitRow& r : rows) by_rep[r.replicate].push_back(r);
    const Design design = c.design.build(graph.size());
    const GmrfParams assumed = c.outcome.kind == OutcomeSpec::Kind::kGmrf ? c.outcome.gmrf : GmrfParams{};
    json reps = json::array();
    for (const auto& [rep, units] : by_rep) {
      if (units.size() != graph.size()) {
        throw ValidationError("replicate " + std::to_string(rep) + " does not cover every unit of the graph");
      }
      std::vector<std::uint8_t> x(graph.size(), 0);
      Eigen::VectorXd y(static_cast<Eigen::Index>(graph.size()));
      std::vector<std::uint8_t> seen(graph.size(), 0);
      for (const UnitRow& u : units) {
        if (u.unit >= graph.size() || seen[u.unit]) {
          throw ValidationError("replicate " + std::to_string(rep) + " has a duplicate or out-of-range unit");
        }
        seen[u.unit] = 1;
        x[u.unit] = static_cast<std::uint8_t>(u.treated);
        y[static_cast<Eigen::Index>(u.unit)] = u.outcome;
      }
      json rec = estimate_data(graph, TreatmentAssignment(x), y, design, assumed);
      rec["replicate"] = rep;
      rec["seed"] = units.front().seed;
      reps.push_back(rec);
    }
    result = {{"config", to_json(c)}, {"replicates", reps}};
  }
  emit(output_path(o, c.output), dump(result));
  return 0;
}

int cmd_effects(const CommonOptions& o) {
  const SimulationConfig c = read_config(o);
  emit(output_path(o, c.output), dump(run_effects_study(c, resolve_threads(o.threads))));
  return 0;
}

int cmd_test(const CommonOptions& o) {
  const SimulationConfig c = read_config(o);
  if (!c.test) throw ConfigError("test", "is required for the test subcommand");
  const std::vector<PvalueRow> rows = run_test_study(c, resolve_threads(o.threads));
  std::ostringstream out;
  write_test_csv(out, rows, to_string(c.test->statistic));
  emit(output_path(o, c.output), out.str());
  return 0;
}

struct ReproduceOptions {
  std::string figure;
  std::optional<std::size_t> replications;
  std::size_t resamples = 500;
  double epsilon = 10.0;
  std::string hist;
};

int cmd_reproduce(const CommonOptions& o, const ReproduceOptions& r) {
  const std::uint64_t seed = o.seed.value_or(0);
  const std::size_t threads = resolve_threads(o.threads);
  std::optional<std::size_t> bins;
  if (!r.hist.empty()) bins = parse_bins(r.hist);

  if (r.figure == "pvals-500" || r.figure == "pvals-1000") {
    const std::size_t n = r.figure == "pvals-500" ? 500 : 1000;
    const std::size_t reps = r.replications.value_or(200);
    std::vector<PvalueRow> all;
    std::optional<std::vector<HistogramBin>> hist;
    if (bins) hist.emplace();
    for (char scenario : {'a', 'b', 'c'}) {
      const std::vector<PvalueRow> rows = run_pvalue_study(scenario, n, reps, seed, threads, r.resamples);
      std::vector<double> p;
      std::size_t below = 0;
      for (const PvalueRow& row : rows) {
        p.push_back(row.p_value);
        if (row.p_value < 0.05) ++below;
      }
      std::cerr << "scenario " << scenario << ": fraction p < 0.05 = "
                << format_double(static_cast<double>(below) / static_cast<double>(reps)) << '\n';
      if (hist) {
        const std::vector<HistogramBin> h = histogram(std::string(1, scenario), p, *bins, 0.0, 1.0);
        hist->insert(hist->end(), h.begin(), h.end());
      }
      all.insert(all.end(), rows.begin(), rows.end());
    }
    std::ostringstream out;
    write_pvalue_csv(out, all);
    emit_with_histogram(o.out, out.str(), hist);
    return 0;
  }
  if (r.figure == "two-worlds") {
    const SimulationConfig c = two_worlds_config(r.replications.value_or(1000), 1000, seed, r.epsilon);
    const std::vector<TwoWorldsRow> rows = run_two_worlds(c, threads);
    std::optional<std::vector<HistogramBin>> hist;
    if (bins) {
      std::vector<double> with, without;
      double lo = HUGE_VAL, hi = -HUGE_VAL;
      for (const TwoWorldsRow& row : rows) {
        (row.has_treated_superstar ? with : without).push_back(row.avg_outcome);
        lo = std::min(lo, row.avg_outcome);
        hi = std::max(hi, row.avg_outcome);
      }
      hist.emplace(histogram("treated_superstar", with, *bins, lo, hi));
      const std::vector<HistogramBin> h = histogram("no_treated_superstar", without, *bins, lo, hi);
      hist->insert(hist->end(), h.begin(), h.end());
    }
    std::ostringstream out;
    write_two_worlds_csv(out, rows);
    emit_with_histogram(o.out, out.str(), hist);
    return 0;
  }
  if (r.figure == "effects") {
    if (bins) throw ValidationError("--emit-hist applies to the p-value and two-worlds figures");
    emit(o.out, dump(reproduce_effects(r.replications.value_or(200), seed, threads)));
    return 0;
  }
  throw ValidationError("--figure must be one of pvals-500, pvals-1000, two-worlds, effects");
}

int cmd_oracle(const CommonOptions& o, std::size_t n, std::size_t instances) {
  const std::vector<OracleCheck> checks = run_oracle(n, o.seed.value_or(0), instances);
  std::ostringstream out;
  print_oracle_table(out, checks);
  emit(o.out, out.str());
  for (const OracleCheck& c : checks) {
    if (!c.passed) return kExitFailed;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and estimation for experiments under network interference"};
  app.require_subcommand(1);

  CommonOptions common;
  CLI::App* graph = app.add_subcommand("graph", "Sample an interference graph as an edge list");
  add_common(graph, common);
  CLI::App* simulate = app.add_subcommand("simulate", "Simulate assignments and outcomes (CSV)");
  add_common(simulate, common);
  std::string graph_out;
  simulate->add_option("--graph-out", graph_out, "Also write the first replicate's graph here");
  CLI::App* estimate = app.add_subcommand("estimate", "Run the estimators (JSON)");
  add_common(estimate, common);
  std::string data_path, graph_path;
  estimate->add_option("--data", data_path, "Simulate CSV to estimate from instead of simulating");
  estimate->add_option("--graph", graph_path, "Edge list matching --data");
  CLI::App* effects = app.add_subcommand("effects", "Enumeration, Monte Carlo and closed-form effects (JSON)");
  add_common(effects, common);
  CLI::App* test = app.add_subcommand("test", "Conditional randomization tests per replicate (CSV)");
  add_common(test, common);

  ReproduceOptions rep;
  CLI::App* reproduce = app.add_subcommand("reproduce", "Regenerate a simulation study table");
  add_common(reproduce, common, false);
  reproduce->add_option("--figure", rep.figure, "pvals-500 | pvals-1000 | two-worlds | effects")->required();
  reproduce->add_option("--replications", rep.replications, "Replicates (default 200; two-worlds 1000)");
  reproduce->add_option("--resamples", rep.resamples, "Resamples per test (p-value figures)");
  reproduce->add_option("--epsilon", rep.epsilon, "Superstar boost (two-worlds)");
  reproduce->add_option("--emit-hist", rep.hist, "Also emit a histogram table, e.g. bins=20");

  std::size_t oracle_n = 8;
  std::size_t oracle_instances = 20;
  CLI::App* oracle = app.add_subcommand("oracle", "Enumeration-based self-checks");
  add_common(oracle, common, false);
  oracle->add_option("--n", oracle_n, "Units per instance (2..12)");
  oracle->add_option("--instances", oracle_instances, "Random instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*graph) return cmd_graph(common);
    if (*simulate) return cmd_simulate(common, graph_out);
    if (*estimate) return cmd_estimate(common, data_path, graph_path);
    if (*effects) return cmd_effects(common);
    if (*test) return cmd_test(common);
    if (*reproduce) return cmd_reproduce(common, rep);
    if (*oracle) return cmd_oracle(common, oracle_n, oracle_instances);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailed;
  }
  return kExitFailed;
}
