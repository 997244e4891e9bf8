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
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "spillover/random.hpp"

namespace spillover {

// Binary treatment vector.
class TreatmentAssignment {
 public:
  TreatmentAssignment() = default;
  explicit TreatmentAssignment(std::vector<std::uint8_t> x);

  static TreatmentAssignment zeros(std::size_t n);
  static TreatmentAssignment ones(std::size_t n);
  // Unit 0 is the most significant bit, so index order is lexicographic order.
  static TreatmentAssignment from_index(std::size_t n, std::uint64_t index);

  std::size_t size() const noexcept { return x_.size(); }
  bool treated(std::size_t i) const { return x_[i] != 0; }
  std::uint8_t operator[](std::size_t i) const { return x_[i]; }
  void set(std::size_t i, bool value) { x_[i] = value ? 1 : 0; }
  TreatmentAssignment with(std::size_t i, bool value) const;
  TreatmentAssignment complement() const;
  std::size_t treated_count() const;

  std::span<const std::uint8_t> values() const noexcept { return x_; }
  Eigen::VectorXd to_vector() const;

  friend auto operator<=>(const TreatmentAssignment&, const TreatmentAssignment&) = default;

 private:
  std::vector<std::uint8_t> x_;
};

struct BernoulliDesign {
  std::vector<double> probabilities;  // each strictly inside (0, 1)
};

struct CompleteDesign {
  std::size_t n_treated;
};

struct ClusterDesign {
  std::vector<std::size_t> labels;  // cluster id per unit
  double probability;               // strictly inside (0, 1)
};

class Design {
 public:
  using Variant = std::variant<BernoulliDesign, CompleteDesign, ClusterDesign>;

  static Design bernoulli(std::vector<double> probabilities);
  static Design bernoulli(std::size_t n, double probability);
  static Design complete(std::size_t n_treated);
  static Design cluster(std::vector<std::size_t> labels, double probability);

  const Variant& variant() const noexcept { return v_; }
  bool is_bernoulli() const noexcept { return std::holds_alternative<BernoulliDesign>(v_); }
  // Throws ValidationError for non-Bernoulli designs.
  const BernoulliDesign& as_bernoulli() const;

  // Throws ValidationError when the design cannot assign n units.
  void check_size(std::size_t n) const;

 private:
  explicit Design(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

TreatmentAssignment sample_assignment(const Design& design, std::size_t n, Rng& rng);

// Exact probability of x under the design (0 outside its support).
double assignment_probability(const Design& design, const TreatmentAssignment& x);

inline constexpr std::size_t kEnumerationCap = 20;

// All 2^n assignments in lexicographic order. Throws for n > kEnumerationCap.
std::vector<TreatmentAssignment> enumerate_assignments(std::size_t n);

double binomial_coefficient(std::size_t n, std::size_t k);

}  // namespace spillover
