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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "spillover/config.hpp"
#include "spillover/designs.hpp"
#include "spillover/graph.hpp"
#include "spillover/gmrf_mle.hpp"
#include "spillover/outcome_models.hpp"

namespace spillover {

// Worker count: the explicit value, else SPILLOVER_LAB_THREADS, else the
// hardware concurrency. Always at least 1.
std::size_t resolve_threads(std::optional<std::size_t> requested);

// Runs body(0..count-1) on up to `threads` workers. The first exception is
// rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

// Seed of replicate r: derive_seed(config seed, r). Scenarios sharing a
// master seed therefore share graphs and assignments.
std::uint64_t replicate_seed(std::uint64_t master, std::size_t replicate);

// One simulated data set drawn from a config with a replicate seed.
struct World {
  InterferenceGraph graph{1};
  std::optional<Eigen::MatrixXd> positions;
  std::vector<std::uint8_t> superstar;  // all zero unless the graph has superstars
  std::optional<Design> design;
  TreatmentAssignment x;
  Eigen::VectorXd y;
  GmrfParams gmrf;  // as used, boost included
  std::shared_ptr<const GmrfSystem> system;  // set for GMRF outcomes
};

World generate_world(const SimulationConfig& config, std::uint64_t seed);
InterferenceGraph generate_graph(const SimulationConfig& config, std::uint64_t seed);

struct PvalueRow {
  std::string scenario;
  std::size_t n;
  std::size_t replicate;
  std::uint64_t seed;
  double observed;
  double p_value;
};

// Scenarios a, b, c: (beta, gamma, delta) = (5, 5, 0), (5, 5, 0.75), (5, 0, 0.75)
// on a rank-1 Beta(1, 3) random dot product graph with Bernoulli(2/5)
// treatment, T_U on 30% random focal units, one-sided.
SimulationConfig pvalue_study_config(char scenario, std::size_t n, std::size_t replications,
                                     std::uint64_t seed, std::size_t resamples = 500);

std::vector<PvalueRow> run_test_study(const SimulationConfig& config, std::size_t threads);
std::vector<PvalueRow> run_pvalue_study(char scenario, std::size_t n, std::size_t replications,
                                        std::uint64_t seed, std::size_t threads,
                                        std::size_t resamples = 500);

struct TwoWorldsRow {
  std::size_t replicate;
  std::uint64_t seed;
  double avg_outcome;
  std::size_t n_superstars;
  bool has_treated_superstar;
};

// beta-model weights 20 with probability 1/1000 and -2 otherwise,
// Bernoulli(1/2) treatment, GMRF (2, 2, 0.9) with superstar boost epsilon.
SimulationConfig two_worlds_config(std::size_t replications, std::size_t n, std::uint64_t seed,
                                   double epsilon = 10.0);
std::vector<TwoWorldsRow> run_two_worlds(const SimulationConfig& config, std::size_t threads);

// Monte Carlo, enumeration (when n is small and the design Bernoulli) and
// closed-form effects per replicate, with a summary across replicates.
nlohmann::json run_effects_study(const SimulationConfig& config, std::size_t threads);

// Effects setup used for the large-N check: beta = 5, gamma = 0, delta = 0.75.
SimulationConfig effects_study_config(std::size_t replications, std::size_t n, std::uint64_t seed);
// Effects study plus the closed form at a large N.
nlohmann::json reproduce_effects(std::size_t replications, std::uint64_t seed, std::size_t threads,
                                 std::size_t n = 500, std::size_t large_n = 100000);

// Estimators on one data set. `scaling` is the assumed GMRF scaling for the
// likelihood fit; estimators needing design probabilities require Bernoulli.
nlohmann::json estimate_data(const InterferenceGraph& graph, const TreatmentAssignment& x,
                             const Eigen::VectorXd& y, const Design& design,
                             const GmrfParams& assumed);
nlohmann::json run_estimate_study(const SimulationConfig& config, std::size_t threads);

struct HistogramBin {
  std::string group;
  std::size_t bin;
  double lower;
  double upper;
  std::size_t count;
};

// Equal-width bins over [lower, upper]; the last bin is closed.
std::vector<HistogramBin> histogram(const std::string& group, const std::vector<double>& values,
                                    std::size_t bins, double lower, double upper);

}  // namespace spillover
