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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spillover/designs.hpp"
#include "spillover/graph.hpp"
#include "spillover/random.hpp"

namespace spillover {

enum class TestStatistic { kTU, kRankCorrelation };
enum class Sidedness { kGreater, kTwoSided };

std::string to_string(TestStatistic s);
std::string to_string(Sidedness s);

struct TestPlan {
  std::vector<std::size_t> focal;  // sorted, unique
  TestStatistic statistic = TestStatistic::kTU;
  std::size_t resamples = 500;
  Sidedness sidedness = Sidedness::kGreater;
  Design design = Design::bernoulli(1, 0.5);
  std::uint64_t seed = 0;

  // Focal set nonempty, a strict subset of the n units, sorted and unique;
  // resamples >= 99; design sized for n.
  void validate(std::size_t n) const;
};

struct TestReport {
  double observed = 0.0;
  double p_value = 1.0;
  double resample_mean = 0.0;
  double resample_sd = 0.0;
  std::size_t resamples_used = 0;
};

inline constexpr std::size_t kMinResamples = 99;

// Uniform subset of size round(fraction * n) clamped to [1, n - 1], sorted.
std::vector<std::size_t> select_focal_random(std::size_t n, double fraction, Rng& rng);

// T_U = U(x, y) - U(1 - x, y) with
//   U(x, y) = sum_{i in F, j notin F} x_j y_i z_ij / sum_{i in F, j notin F} x_j z_ij
// and 0/0 taken as 0. Reads y only on focal units.
double stat_TU(const TreatmentAssignment& x, const Eigen::VectorXd& y,
               const InterferenceGraph& graph, std::span<const std::size_t> focal);

// Spearman correlation between focal outcomes and the distance from each focal
// unit to the nearest treated non-focal unit. Unreachable ranks last; ties get
// average ranks; 0 when either ranking is constant.
double stat_rank_correlation(const TreatmentAssignment& x, const Eigen::VectorXd& y,
                             const InterferenceGraph& graph, std::span<const std::size_t> focal);

// Conditional randomization test: focal assignments stay at their observed
// values, non-focal ones are redrawn from the Bernoulli design. Resample r
// uses the stream derive_seed(plan.seed, r).
TestReport crt_pvalue(const TreatmentAssignment& x_obs, const Eigen::VectorXd& y_obs,
                      const InterferenceGraph& graph, const TestPlan& plan);

}  // namespace spillover
