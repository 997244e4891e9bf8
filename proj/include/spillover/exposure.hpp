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

#include <compare>
#include <cstddef>
#include <string>
#include <vector>

#include "spillover/designs.hpp"
#include "spillover/graph.hpp"
#include "spillover/random.hpp"

namespace spillover {

// Exposure level of one unit. Field use depends on the mapping:
//   own treatment:            (x_i, 0, 0)
//   treated-neighbor count:   (x_i, k, degree_i)
//   binned treated fraction:  (x_i, bin, 0)
struct ExposureLevel {
  int treated = 0;
  std::size_t k = 0;
  std::size_t m = 0;

  friend auto operator<=>(const ExposureLevel&, const ExposureLevel&) = default;
};

std::string to_string(const ExposureLevel& d);

class ExposureMapping {
 public:
  enum class Kind { kOwnTreatment, kNeighborCount, kFractionBinned };

  static ExposureMapping own_treatment() { return ExposureMapping(Kind::kOwnTreatment, {}); }
  static ExposureMapping neighbor_count() { return ExposureMapping(Kind::kNeighborCount, {}); }
  // Edges strictly increasing from 0 to 1; bin b is [e_b, e_{b+1}), the last
  // bin closed on the right.
  static ExposureMapping fraction_binned(std::vector<double> edges);

  Kind kind() const noexcept { return kind_; }
  const std::vector<double>& bin_edges() const noexcept { return edges_; }
  std::size_t bin_of(double fraction) const;

 private:
  ExposureMapping(Kind kind, std::vector<double> edges) : kind_(kind), edges_(std::move(edges)) {}
  Kind kind_;
  std::vector<double> edges_;
};

// Treated fraction of isolated units is 0.
ExposureLevel exposure_value(const ExposureMapping& mapping, const InterferenceGraph& graph,
                             const TreatmentAssignment& x, std::size_t i);
std::vector<ExposureLevel> exposure_values(const ExposureMapping& mapping,
                                           const InterferenceGraph& graph,
                                           const TreatmentAssignment& x);

// P(f_i(X) = d) under a Bernoulli design (Poisson-binomial over neighbors,
// reducing to the binomial formula for a common probability). Throws
// ValidationError for other designs.
double exposure_probability(const ExposureMapping& mapping, const InterferenceGraph& graph,
                            const Design& design, std::size_t i, const ExposureLevel& d);
std::vector<double> exposure_probabilities(const ExposureMapping& mapping,
                                           const InterferenceGraph& graph, const Design& design,
                                           const ExposureLevel& d);

struct ProbabilityEstimate {
  double probability;
  double se;
};

// Empirical frequency of f_i(X) = d for every unit over `replications`
// assignments drawn from any design.
std::vector<ProbabilityEstimate> exposure_probabilities_mc(const ExposureMapping& mapping,
                                                           const InterferenceGraph& graph,
                                                           const Design& design,
                                                           const ExposureLevel& d,
                                                           std::size_t replications, Rng& rng);

}  // namespace spillover
