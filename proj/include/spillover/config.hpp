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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "spillover/designs.hpp"
#include "spillover/errors.hpp"
#include "spillover/interference_tests.hpp"
#include "spillover/outcome_models.hpp"

namespace spillover {

// Thrown for schema violations; the message starts with the field path.
class ConfigError : public ValidationError {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : ValidationError(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct GraphSpec {
  enum class Kind { kRdpg, kBetaModel, kEdgeList };
  Kind kind = Kind::kRdpg;
  // rdpg: explicit positions, or iid Beta(latent_a, latent_b) rank-1 draws.
  std::optional<Eigen::MatrixXd> positions;
  double latent_a = 1.0;
  double latent_b = 3.0;
  double sparsity = 1.0;
  // beta model: explicit weights, or weight_high with probability
  // superstar_probability and weight_low otherwise.
  std::optional<std::vector<double>> weights;
  double superstar_probability = 0.0;
  double weight_low = -2.0;
  double weight_high = 20.0;
  // edge list
  std::string path;
};

struct DesignSpec {
  enum class Kind { kBernoulli, kComplete, kCluster };
  Kind kind = Kind::kBernoulli;
  double probability = 0.5;
  std::optional<std::vector<double>> probabilities;
  std::size_t n_treated = 0;
  std::vector<std::size_t> labels;

  Design build(std::size_t n) const;
};

struct OutcomeSpec {
  enum class Kind { kGmrf, kFixedLinear };
  Kind kind = Kind::kGmrf;
  GmrfParams gmrf;
  // Boost the own effect of superstars (beta-model graphs) by this epsilon.
  std::optional<double> superstar_boost;
  FixedLinearModel linear;
};

struct TestSpec {
  double focal_fraction = 0.3;
  TestStatistic statistic = TestStatistic::kTU;
  std::size_t resamples = 500;
  Sidedness sidedness = Sidedness::kGreater;
};

struct SimulationConfig {
  std::uint64_t seed = 0;
  std::string scenario = "custom";
  std::size_t n = 100;
  std::size_t replications = 1;
  GraphSpec graph;
  DesignSpec design;
  OutcomeSpec outcome;
  std::optional<TestSpec> test;
  // Monte Carlo assignments per replicate in the effects study.
  std::size_t effect_draws = 200;
  std::optional<std::string> output;
};

SimulationConfig parse_config(const nlohmann::json& j);
SimulationConfig parse_config_text(const std::string& text);
SimulationConfig load_config(std::istream& in);
nlohmann::json to_json(const SimulationConfig& config);

Scaling parse_scaling(const nlohmann::json& j, const std::string& field);
nlohmann::json scaling_to_json(const Scaling& s);

}  // namespace spillover
