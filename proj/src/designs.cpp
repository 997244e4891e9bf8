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

#include "spillover/designs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "spillover/errors.hpp"

namespace spillover {

TreatmentAssignment::TreatmentAssignment(std::vector<std::uint8_t> x) : x_(std::move(x)) {
  for (std::size_t i = 0; i < x_.size(); ++i) {
    if (x_[i] > 1) {
      throw ValidationError("treatment entry " + std::to_string(i) + " is not binary");
    }
  }
}

TreatmentAssignment TreatmentAssignment::zeros(std::size_t n) {
  return TreatmentAssignment(std::vector<std::uint8_t>(n, 0));
}

TreatmentAssignment TreatmentAssignment::ones(std::size_t n) {
  return TreatmentAssignment(std::vector<std::uint8_t>(n, 1));
}

TreatmentAssignment TreatmentAssignment::from_index(std::size_t n, std::uint64_t index) {
  std::vector<std::uint8_t> x(n, 0);
  for (std::size_t j = 0; j < n; ++j) x[j] = (index >> (n - 1 - j)) & 1U;
  return TreatmentAssignment(std::move(x));
}

TreatmentAssignment TreatmentAssignment::with(std::size_t i, bool value) const {
  TreatmentAssignment out = *this;
  out.set(i, value);
  return out;
}

TreatmentAssignment TreatmentAssignment::complement() const {
  TreatmentAssignment out = *this;
  for (auto& v : out.x_) v = 1 - v;
  return out;
}

std::size_t TreatmentAssignment::treated_count() const {
  return static_cast<std::size_t>(std::count(x_.begin(), x_.end(), std::uint8_t{1}));
}

Eigen::VectorXd TreatmentAssignment::to_vector() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x_.size()));
  for (std::size_t i = 0; i < x_.size(); ++i) v[i] = x_[i];
  return v;
}

namespace {

void check_interior(double p, const std::string& what) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ValidationError(what + " must lie strictly inside (0, 1), got " + std::to_string(p));
  }
}

}  // namespace

Design Design::bernoulli(std::vector<double> probabilities) {
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    check_interior(probabilities[i], "Bernoulli probability of unit " + std::to_string(i));
  }
  return Design(BernoulliDesign{std::move(probabilities)});
}

Design Design::bernoulli(std::size_t n, double probability) {
  return bernoulli(std::vector<double>(n, probability));
}

Design Design::complete(std::size_t n_treated) { return Design(CompleteDesign{n_treated}); }

Design Design::cluster(std::vector<std::size_t> labels, double probability) {
  check_interior(probability, "cluster treatment probability");
  return Design(ClusterDesign{std::move(labels), probability});
}

const BernoulliDesign& Design::as_bernoulli() const {
  if (const auto* b = std::get_if<BernoulliDesign>(&v_)) return *b;
  throw ValidationError("operation requires a Bernoulli design");
}

void Design::check_size(std::size_t n) const {
  std::visit(
      [n](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, BernoulliDesign>) {
          if (d.probabilities.size() != n) {
            throw ValidationError("Bernoulli design has " + std::to_string(d.probabilities.size()) +
                                  " probabilities for " + std::to_string(n) + " units");
          }
        } else if constexpr (std::is_same_v<T, CompleteDesign>) {
          if (d.n_treated > n) {
            throw ValidationError("complete design treats " + std::to_string(d.n_treated) +
                                  " of only " + std::to_string(n) + " units");
          }
        } else {
          if (d.labels.size() != n) {
            throw ValidationError("cluster design has " + std::to_string(d.labels.size()) +
                                  " labels for " + std::to_string(n) + " units");
          }
        }
      },
      v_);
}

TreatmentAssignment sample_assignment(const Design& design, std::size_t n, Rng& rng) {
  design.check_size(n);
  TreatmentAssignment x = TreatmentAssignment::zeros(n);
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, BernoulliDesign>) {
          for (std::size_t i = 0; i < n; ++i) x.set(i, rng.bernoulli(d.probabilities[i]));
        } else if constexpr (std::is_same_v<T, CompleteDesign>) {
          // Partial Fisher-Yates: the first n_treated slots are a uniform subset.
          std::vector<std::size_t> units(n);
          std::iota(units.begin(), units.end(), 0);
          for (std::size_t k = 0; k < d.n_treated; ++k) {
            const std::size_t pick = k + static_cast<std::size_t>(rng.below(n - k));
            std::swap(units[k], units[pick]);
            x.set(units[k], true);
          }
        } else {
          std::map<std::size_t, bool> cluster_treated;
          for (std::size_t i = 0; i < n; ++i) {
            auto [it, inserted] = cluster_treated.try_emplace(d.labels[i], false);
            if (inserted) it->second = rng.bernoulli(d.probability);
            x.set(i, it->second);
          }
        }
      },
      design.variant());
  return x;
}

double binomial_coefficient(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  return std::exp(std::lgamma(static_cast<double>(n) + 1.0) -
                  std::lgamma(static_cast<double>(k) + 1.0) -
                  std::lgamma(static_cast<double>(n - k) + 1.0));
}

double assignment_probability(const Design& design, const TreatmentAssignment& x) {
  const std::size_t n = x.size();
  design.check_size(n);
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, BernoulliDesign>) {
          double p = 1.0;
          for (std::size_t i = 0; i < n; ++i) {
            p *= x.treated(i) ? d.probabilities[i] : 1.0 - d.probabilities[i];
          }
          return p;
        } else if constexpr (std::is_same_v<T, CompleteDesign>) {
          if (x.treated_count() != d.n_treated) return 0.0;
          return 1.0 / std::round(binomial_coefficient(n, d.n_treated));
        } else {
          // Cluster first-seen order; every member must share one value.
          std::map<std::size_t, bool> value;
          for (std::size_t i = 0; i < n; ++i) {
            auto [it, inserted] = value.try_emplace(d.labels[i], x.treated(i));
            if (!inserted && it->second != x.treated(i)) return 0.0;
          }
          double p = 1.0;
          for (const auto& [label, treated] : value) {
            p *= treated ? d.probability : 1.0 - d.probability;
          }
          return p;
        }
      },
      design.variant());
}

std::vector<TreatmentAssignment> enumerate_assignments(std::size_t n) {
  if (n > kEnumerationCap) {
    throw ValidationError("enumeration cap is " + std::to_string(kEnumerationCap) +
                          " units, got " + std::to_string(n));
  }
  const std::uint64_t count = std::uint64_t{1} << n;
  std::vector<TreatmentAssignment> out;
  out.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) out.push_back(TreatmentAssignment::from_index(n, k));
  return out;
}

}  // namespace spillover
