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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "json.hpp"
#include "spillover/config.hpp"
#include "spillover/errors.hpp"
#include "spillover/random.hpp"
#include "spillover/studies.hpp"
#include "spillover/table_io.hpp"

namespace spillover {
namespace {

const char* kBaseConfig = R"({
  "seed": 3, "n": 40, "replications": 2,
  "graph": {"model": "rdpg", "latent": {"a": 1, "b": 3}},
  "design": {"type": "bernoulli", "probability": 0.4},
  "outcome": {"model": "gmrf", "beta": 2, "gamma": 1, "delta": 0.5}
})";

nlohmann::json Base() { return nlohmann::json::parse(kBaseConfig); }

std::string ErrorOf(const nlohmann::json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ConfigTest, ParsesBase) {
  const SimulationConfig c = parse_config(Base());
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.n, 40u);
  EXPECT_EQ(c.graph.kind, GraphSpec::Kind::kRdpg);
  EXPECT_EQ(c.outcome.gmrf.delta, 0.5);
  EXPECT_FALSE(c.test.has_value());
}

TEST(ConfigTest, ErrorsNameTheField) {
  nlohmann::json j = Base();
  j["outcome"]["delta"] = 1.2;
  const std::string delta = ErrorOf(j);
  EXPECT_NE(delta.find("outcome.delta"), std::string::npos) << delta;
  EXPECT_NE(delta.find("|delta| < 1"), std::string::npos) << delta;

  j = Base();
  j["outcome"]["colour"] = 1;
  EXPECT_NE(ErrorOf(j).find("outcome.colour"), std::string::npos);
  j = Base();
  j.erase("n");
  EXPECT_NE(ErrorOf(j).find("n"), std::string::npos);
  j = Base();
  j["replications"] = 0;
  EXPECT_NE(ErrorOf(j).find("replications"), std::string::npos);
  j = Base();
  j["design"]["probability"] = 1.0;
  EXPECT_NE(ErrorOf(j).find("design.probability"), std::string::npos);
  j = Base();
  j["graph"]["model"] = "lattice";
  EXPECT_NE(ErrorOf(j).find("graph.model"), std::string::npos);
  j = Base();
  j["outcome"]["sigma2"] = -1;
  EXPECT_NE(ErrorOf(j).find("outcome.sigma2"), std::string::npos);
  j = Base();
  j["test"] = {{"focal_fraction", 1.5}};
  EXPECT_NE(ErrorOf(j).find("test.focal_fraction"), std::string::npos);
  EXPECT_THROW(parse_config_text("{ not json"), ValidationError);
}

TEST(ConfigTest, JsonRoundTrip) {
  for (const SimulationConfig& c :
       {parse_config(Base()), pvalue_study_config('b', 500, 200, 7), two_worlds_config(10, 100, 5, 0.0),
        effects_study_config(4, 10, 9)}) {
    const nlohmann::json j = to_json(c);
    EXPECT_EQ(to_json(parse_config(j)), j);
  }
}

TEST(ConfigTest, ScalingForms) {
  EXPECT_EQ(parse_scaling("degree", "s"), Scaling::degree());
  EXPECT_EQ(parse_scaling("spectral", "s"), Scaling::spectral());
  EXPECT_EQ(parse_scaling(0.25, "s"), Scaling::constant_value(0.25));
  EXPECT_THROW(parse_scaling("row", "s"), ConfigError);
  EXPECT_THROW(parse_scaling(-1.0, "s"), ConfigError);
  nlohmann::json j = Base();
  j["outcome"]["scaling"] = {{"treatment", "degree"}, {"outcome", "spectral"}};
  const SimulationConfig c = parse_config(j);
  EXPECT_EQ(c.outcome.gmrf.treatment_scaling, Scaling::degree());
  EXPECT_EQ(c.outcome.gmrf.outcome_scaling, Scaling::spectral());
}

TEST(TableIoTest, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(-1.5e-20), "-1.5000000000000001e-20");
  EXPECT_EQ(format_double(1e300), "1.0000000000000001e+300");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(TableIoTest, HeadersAndRows) {
  std::ostringstream p;
  write_pvalue_csv(p, {{"a", 500, 0, 12, 1.5, 0.25}});
  EXPECT_EQ(p.str(), "scenario,n,replicate,seed,observed_stat,p_value\na,500,0,12,1.5,0.25\n");
  std::ostringstream t;
  write_two_worlds_csv(t, {{3, 99, 19.5, 1, true}, {4, 100, 18.25, 0, false}});
  EXPECT_EQ(t.str(),
            "replicate,seed,avg_outcome,n_superstars,has_treated_superstar\n3,99,19.5,1,1\n4,100,18.25,0,0\n");
  std::ostringstream s;
  write_test_csv(s, {{"custom", 40, 1, 5, -0.5, 1.0}}, "TU");
  EXPECT_EQ(s.str(), "replicate,scenario,n,statistic,observed,p_value,seed\n1,custom,40,TU,-0.5,1,5\n");
}

TEST(TableIoTest, SimulateRoundTripAndErrors) {
  const std::vector<UnitRow> rows{{0, 11, 0, 1, 2.5}, {0, 11, 1, 0, -0.125}};
  std::ostringstream out;
  write_simulate_csv(out, rows);
  std::istringstream in(out.str());
  const auto back = read_simulate_csv(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].outcome, -0.125);
  EXPECT_EQ(back[0].treated, 1);
  std::istringstream bad(std::string(kSimulateHeader) + "\n0,11,0,1,2.5\n0,11,1,2,0\n");
  try {
    read_simulate_csv(bad);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream header("unit,outcome\n");
  EXPECT_THROW(read_simulate_csv(header), ParseError);
}

TEST(HistogramTest, BinsAndEdges) {
  const auto bins = histogram("g", {0.0, 0.1, 0.5, 0.99, 1.0}, 4, 0.0, 1.0);
  ASSERT_EQ(bins.size(), 4u);
  EXPECT_EQ(bins[0].count, 2u);
  EXPECT_EQ(bins[2].count, 1u);
  EXPECT_EQ(bins[3].count, 2u);
  EXPECT_EQ(bins[3].upper, 1.0);
  std::size_t total = 0;
  for (const auto& b : bins) total += b.count;
  EXPECT_EQ(total, 5u);
  EXPECT_THROW(histogram("g", {1.0}, 0, 0.0, 1.0), ValidationError);
}

TEST(SeedTest, ReplicateSeedsArePure) {
  EXPECT_EQ(replicate_seed(7, 3), derive_seed(7, 3));
  EXPECT_NE(replicate_seed(7, 3), replicate_seed(7, 4));
  EXPECT_NE(replicate_seed(7, 3), replicate_seed(8, 3));
}

TEST(StudiesTest, PvalueStudyIndependentOfThreads) {
  const auto one = run_pvalue_study('b', 120, 6, 5, 1, 99);
  const auto many = run_pvalue_study('b', 120, 6, 5, 4, 99);
  ASSERT_EQ(one.size(), 6u);
  std::ostringstream a, b;
  write_pvalue_csv(a, one);
  write_pvalue_csv(b, many);
  EXPECT_EQ(a.str(), b.str());
  for (std::size_t r = 0; r < one.size(); ++r) {
    EXPECT_EQ(one[r].replicate, r);
    EXPECT_EQ(one[r].seed, replicate_seed(5, r));
  }
}

TEST(StudiesTest, WorldsAreReproducible) {
  const SimulationConfig c = parse_config(Base());
  const World a = generate_world(c, 42);
  const World b = generate_world(c, 42);
  EXPECT_EQ(a.graph.edges(), b.graph.edges());
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(generate_graph(c, 42).edges(), a.graph.edges());
}

TEST(StudiesTest, TwoWorldsClassification) {
  const auto rows = run_two_worlds(two_worlds_config(60, 1000, 3), 1);
  bool saw_superstar_untreated = false;
  for (const TwoWorldsRow& r : rows) {
    if (r.n_superstars == 0) EXPECT_FALSE(r.has_treated_superstar);
    if (r.n_superstars > 0 && !r.has_treated_superstar) saw_superstar_untreated = true;
  }
  EXPECT_TRUE(saw_superstar_untreated);
}

TEST(StudiesTest, EffectsStudyNoSpilloverAgrees) {
  // Complete graph, so no unit is isolated and the treatment term reaches all.
  SimulationConfig c = effects_study_config(5, 10, 4);
  c.graph.positions = Eigen::MatrixXd::Ones(10, 1);
  c.outcome.gmrf.gamma = 1.0;
  c.outcome.gmrf.delta = 0.0;
  c.effect_draws = 400;
  const nlohmann::json report = run_effects_study(c, 1);
  for (const auto& rec : report["replicates"]) {
    ASSERT_FALSE(rec["enumeration"].is_null());
    EXPECT_NEAR(rec["enumeration"]["total"]["value"].get<double>(), 6.0, 1e-12);
    EXPECT_NEAR(rec["closed_form"]["total"]["value"].get<double>(), 6.0, 1e-12);
    EXPECT_NEAR(rec["monte_carlo"]["total"]["value"].get<double>(), 6.0, 1e-9);
    EXPECT_LE(rec["gaps"]["mc_vs_enumeration_se"].get<double>(), 4.0);
  }
}

TEST(StudiesTest, EffectsStudyEnumerationMatchesMonteCarlo) {
  SimulationConfig c = effects_study_config(8, 10, 12);
  c.effect_draws = 400;
  const nlohmann::json report = run_effects_study(c, 1);
  for (const auto& rec : report["replicates"]) {
    EXPECT_LE(rec["gaps"]["mc_vs_enumeration_se"].get<double>(), 4.0);
    EXPECT_NEAR(rec["gaps"]["decomposition"].get<double>(), 0.0, 1e-10);
    EXPECT_LE(rec["sensitivity"]["gap"].get<double>(), 1e-5);
  }
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double MedianSe(const std::vector<double>& v) {
  double mean = 0.0;
  for (double e : v) mean += e / static_cast<double>(v.size());
  double ss = 0.0;
  for (double e : v) ss += (e - mean) * (e - mean);
  const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return std::sqrt(std::numbers::pi / 2.0) * sd / std::sqrt(static_cast<double>(v.size()));
}

// With the boost switched off the two groups should be indistinguishable.
TEST(StudiesTest, TwoWorldsWithoutBoostHasEqualMedians) {
  const auto rows = run_two_worlds(two_worlds_config(300, 1000, 7, 0.0), resolve_threads(std::nullopt));
  std::vector<double> with, without;
  for (const TwoWorldsRow& r : rows) (r.has_treated_superstar ? with : without).push_back(r.avg_outcome);
  ASSERT_GE(with.size(), 10u);
  ASSERT_GE(without.size(), 10u);
  const double se = std::hypot(MedianSe(with), MedianSe(without));
  EXPECT_LT(std::abs(Median(with) - Median(without)), 4.0 * se);
}

}  // namespace
}  // namespace spillover
