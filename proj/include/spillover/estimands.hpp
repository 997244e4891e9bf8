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
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spillover/designs.hpp"
#include "spillover/outcome_models.hpp"
#include "spillover/random.hpp"

namespace spillover {

enum class Estimand { kDirect, kIndirect, kTotal, kAllOrNothing, kExposureContrast, kWelfare };
enum class EstimationMethod { kEnumeration, kMonteCarlo, kClosedForm };

std::string to_string(Estimand e);
std::string to_string(EstimationMethod m);

// mc_se and replications are set exactly when method is kMonteCarlo.
struct EffectEstimate {
  Estimand estimand = Estimand::kTotal;
  double value = 0.0;
  std::optional<double> mc_se;
  EstimationMethod method = EstimationMethod::kEnumeration;
  std::optional<std::size_t> replications;
};

struct EffectTriple {
  EffectEstimate direct;
  EffectEstimate indirect;
  EffectEstimate total;
};

inline constexpr std::size_t kEstimandEnumerationCap = 12;

// (1/N) sum_i (E Y_i(1) - E Y_i(0)).
EffectEstimate tau_all(const OutcomeMeanModel& model);

// Exact direct/indirect/total effects under a Bernoulli design by summing over
// all 2^n assignments. n <= kEstimandEnumerationCap.
EffectTriple effects_enumeration(const OutcomeMeanModel& model, const Design& design);

// Monte Carlo over assignments drawn from `design`; every draw contributes all
// N flip effects. The total is the per-draw sum of direct and indirect parts,
// so its SE accounts for their covariance.
EffectTriple effects_monte_carlo(const OutcomeMeanModel& model, const Design& design,
                                 std::size_t replications, Rng& rng);

// Finite-N outcome-spillover amplification for latent positions alpha (N x K):
//   delta * (1^T alpha) (||alpha||_2^2 I - delta alpha^T alpha)^{-1} (alpha^T 1) / N
// with ||alpha||_2 the spectral norm. Throws NumericalError when the K x K
// matrix is singular.
double amplification_factor(const Eigen::MatrixXd& positions, double delta);

// Large-N effects of the GMRF on a random dot product graph with amplification
// a: direct beta, indirect gamma + (beta + gamma) a, total (beta + gamma)(1 + a).
EffectTriple closed_form_effects(double beta, double gamma, double delta,
                                 const Eigen::MatrixXd& positions);
EffectTriple closed_form_effects_from_amplification(double beta, double gamma, double a);

// Compares the enumerated total effect with the sum of sensitivities of
// expected outcomes to the Bernoulli probabilities (central differences).
struct SensitivityCheck {
  double total_effect;
  double derivative_sum;
  double gap;
};
SensitivityCheck sensitivity_check(const OutcomeMeanModel& model, std::vector<double> probabilities,
                                   double step = 1e-4);

// (1/N) sum_i E Y_i(x).
EffectEstimate welfare(const OutcomeMeanModel& model, const TreatmentAssignment& x);

enum class SearchMethod { kExhaustive, kGreedy };

struct OptimizedAssignment {
  TreatmentAssignment assignment;
  double welfare;
};

// Exhaustive: lexicographically smallest global maximizer (n <= 20).
// Greedy: single-flip ascent from 0_N until no feasible flip improves welfare.
// A budget caps the number of treated units.
OptimizedAssignment optimize_assignment(const OutcomeMeanModel& model, SearchMethod method,
                                        std::optional<std::size_t> budget = std::nullopt);

}  // namespace spillover
