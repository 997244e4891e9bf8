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

#include "spillover/exposure.hpp"

#include <algorithm>
#include <cmath>

#include "spillover/errors.hpp"

namespace spillover {

std::string to_string(const ExposureLevel& d) {
  return "(" + std::to_string(d.treated) + "," + std::to_string(d.k) + "," + std::to_string(d.m) +
         ")";
}

ExposureMapping ExposureMapping::fraction_binned(std::vector<double> edges) {
  if (edges.size() < 2 || edges.front() != 0.0 || edges.back() != 1.0) {
    throw ValidationError("bin edges must start at 0 and end at 1");
  }
  for (std::size_t b = 1; b < edges.size(); ++b) {
    if (!(edges[b] > edges[b - 1])) throw ValidationError("bin edges must be strictly increasing");
  }
  return ExposureMapping(Kind::kFractionBinned, std::move(edges));
}

std::size_t ExposureMapping::bin_of(double fraction) const {
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), fraction);
  const auto b = static_cast<std::size_t>(std::distance(edges_.begin(), it));
  return std::min(b == 0 ? 0 : b - 1, edges_.size() - 2);
}

ExposureLevel exposure_value(const ExposureMapping& mapping, const InterferenceGraph& graph,
                             const TreatmentAssignment& x, std::size_t i) {
  if (i >= graph.size() || x.size() != graph.size()) {
    throw ValidationError("exposure_value: unit or assignment out of range");
  }
  ExposureLevel d{x[i], 0, 0};
  if (mapping.kind() == ExposureMapping::Kind::kOwnTreatment) return d;
  std::size_t treated = 0;
  for (std::size_t j : graph.neighbors(i)) treated += x[j];
  if (mapping.kind() == ExposureMapping::Kind::kNeighborCount) {
    d.k = treated;
    d.m = graph.degree(i);
  } else {
    const double frac = graph.degree(i) > 0 ? static_cast<double>(treated) /
                                                  static_cast<double>(graph.degree(i))
                                            : 0.0;
    d.k = mapping.bin_of(frac);
  }
  return d;
}

std::vector<ExposureLevel> exposure_values(const ExposureMapping& mapping,
                                           const InterferenceGraph& graph,
                                           const TreatmentAssignment& x) {
  std::vector<ExposureLevel> out;
  out.reserve(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) out.push_back(exposure_value(mapping, graph, x, i));
  return out;
}

namespace {

// Distribution of the number of treated neighbors.
std::vector<double> poisson_binomial(const std::vector<double>& p, const InterferenceGraph& graph,
                                     std::size_t i) {
  std::vector<double> dist{1.0};
  for (std::size_t j : graph.neighbors(i)) {
    std::vector<double> next(dist.size() + 1, 0.0);
    for (std::size_t k = 0; k < dist.size(); ++k) {
      next[k] += dist[k] * (1.0 - p[j]);
      next[k + 1] += dist[k] * p[j];
    }
    dist = std::move(next);
  }
  return dist;
}

}  // namespace

double exposure_probability(const ExposureMapping& mapping, const InterferenceGraph& graph,
                            const Design& design, std::size_t i, const ExposureLevel& d) {
  if (!design.is_bernoulli()) {
    throw ValidationError("exact exposure probabilities require a Bernoulli design");
  }
  design.check_size(graph.size());
  if (i >= graph.size()) throw ValidationError("unit out of range");
  const std::vector<double>& p = design.as_bernoulli().probabilities;
  if (d.treated != 0 && d.treated != 1) return 0.0;
  const double own = d.treated ? p[i] : 1.0 - p[i];

  switch (mapping.kind()) {
    case ExposureMapping::Kind::kOwnTreatment:
      return (d.k == 0 && d.m == 0) ? own : 0.0;
    case ExposureMapping::Kind::kNeighborCount: {
      if (d.m != graph.degree(i) || d.k > d.m) return 0.0;
      return own * poisson_binomial(p, graph, i)[d.k];
    }
    case ExposureMapping::Kind::kFractionBinned: {
      if (d.m != 0) return 0.0;
      const std::size_t deg = graph.degree(i);
      if (deg == 0) return mapping.bin_of(0.0) == d.k ? own : 0.0;
      const std::vector<double> dist = poisson_binomial(p, graph, i);
      double mass = 0.0;
      for (std::size_t k = 0; k <= deg; ++k) {
        const double frac = static_cast<double>(k) / static_cast<double>(deg);
        if (mapping.bin_of(frac) == d.k) mass += dist[k];
      }
      return own * mass;
    }
  }
  return 0.0;
}

std::vector<double> exposure_probabilities(const ExposureMapping& mapping,
                                           const InterferenceGraph& graph, const Design& design,
                                           const ExposureLevel& d) {
  std::vector<double> out(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) {
    out[i] = exposure_probability(mapping, graph, design, i, d);
  }
  return out;
}

std::vector<ProbabilityEstimate> exposure_probabilities_mc(const ExposureMapping& mapping,
                                                           const InterferenceGraph& graph,
                                                           const Design& design,
                                                           const ExposureLevel& d,
                                                           std::size_t replications, Rng& rng) {
  if (replications == 0) throw ValidationError("Monte Carlo needs at least one replication");
  const std::size_t n = graph.size();
  std::vector<std::size_t> hits(n, 0);
  for (std::size_t r = 0; r < replications; ++r) {
    const TreatmentAssignment x = sample_assignment(design, n, rng);
    for (std::size_t i = 0; i < n; ++i) {
      if (exposure_value(mapping, graph, x, i) == d) ++hits[i];
    }
  }
  std::vector<ProbabilityEstimate> out(n);
  const double rr = static_cast<double>(replications);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = static_cast<double>(hits[i]) / rr;
    out[i] = {p, std::sqrt(p * (1.0 - p) / rr)};
  }
  return out;
}

}  // namespace spillover
