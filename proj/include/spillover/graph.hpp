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
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "spillover/random.hpp"

namespace spillover {

using Edge = std::pair<std::size_t, std::size_t>;

// Symmetric binary adjacency over n >= 1 units with zero diagonal. Immutable
// after construction; degrees and neighbor lists are cached.
class InterferenceGraph {
 public:
  // Empty graph on n units.
  explicit InterferenceGraph(std::size_t n);

  // Throws ValidationError on out-of-range indices, self-loops, or duplicates.
  static InterferenceGraph from_edges(std::size_t n, std::span<const Edge> edges);

  // Row-major n*n 0/1 matrix. Rejects asymmetry and nonzero diagonal.
  static InterferenceGraph from_adjacency(std::size_t n,
                                          std::vector<std::uint8_t> adjacency);

  std::size_t size() const noexcept { return n_; }
  bool adjacent(std::size_t i, std::size_t j) const { return adj_[i * n_ + j] != 0; }
  std::size_t degree(std::size_t i) const { return degrees_[i]; }
  const std::vector<std::size_t>& degrees() const noexcept { return degrees_; }
  std::span<const std::size_t> neighbors(std::size_t i) const { return neighbors_[i]; }
  std::size_t edge_count() const noexcept { return edge_count_; }

  // Edges with i < j in lexicographic order.
  std::vector<Edge> edges() const;

  Eigen::MatrixXd dense() const;
  Eigen::SparseMatrix<double> sparse() const;

  friend bool operator==(const InterferenceGraph& a, const InterferenceGraph& b) {
    return a.n_ == b.n_ && a.adj_ == b.adj_;
  }

 private:
  InterferenceGraph(std::size_t n, std::vector<std::uint8_t> adjacency, bool validate);
  void build_cache();

  std::size_t n_;
  std::vector<std::uint8_t> adj_;
  std::vector<std::size_t> degrees_;
  std::vector<std::vector<std::size_t>> neighbors_;
  std::size_t edge_count_ = 0;
};

// Random dot product graph: P_ij = sparsity * <positions_i, positions_j>.
class RdpgParams {
 public:
  // Validates sparsity in [0,1] and every pair probability (i == j included)
  // in [0,1]; nothing is clipped.
  RdpgParams(Eigen::MatrixXd positions, double sparsity);

  std::size_t size() const noexcept { return static_cast<std::size_t>(positions_.rows()); }
  std::size_t rank() const noexcept { return static_cast<std::size_t>(positions_.cols()); }
  const Eigen::MatrixXd& positions() const noexcept { return positions_; }
  double sparsity() const noexcept { return sparsity_; }
  double edge_probability(std::size_t i, std::size_t j) const;

 private:
  Eigen::MatrixXd positions_;
  double sparsity_;
};

// beta-model: P_ij = logistic(w_i + w_j).
class BetaModelParams {
 public:
  explicit BetaModelParams(Eigen::VectorXd weights);

  std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.size()); }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  double edge_probability(std::size_t i, std::size_t j) const;

 private:
  Eigen::VectorXd weights_;
};

double logistic(double s) noexcept;

InterferenceGraph sample_rdpg(const RdpgParams& params, Rng& rng);
InterferenceGraph sample_beta_model(const BetaModelParams& params, Rng& rng);

// n x 1 matrix of iid Beta(a, b) draws.
Eigen::MatrixXd sample_latent_beta(std::size_t n, double a, double b, Rng& rng);

using PathCountMatrix = Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic>;

// d-th power of the adjacency matrix: entry (i, a) counts walks of length d.
// Throws NumericalError if any count overflows 64 bits.
PathCountMatrix path_count_matrix(const InterferenceGraph& graph, unsigned d);

inline constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

// Geodesic distance from each source to the closest marked unit, kUnreachable
// when none is reachable (including an empty marked set).
std::vector<std::size_t> distance_to_nearest(const InterferenceGraph& graph,
                                             std::span<const std::size_t> sources,
                                             std::span<const std::size_t> marked);

// Largest adjacency eigenvalue (0 for an edgeless graph).
double spectral_radius(const InterferenceGraph& graph);

// Edge-list text format: "n <count>" then one "i j" line per edge, 0-based,
// i < j. Errors carry the offending line number.
InterferenceGraph read_edge_list(std::istream& in);
InterferenceGraph read_edge_list(const std::string& path);
void write_edge_list(std::ostream& out, const InterferenceGraph& graph);
void write_edge_list(const std::string& path, const InterferenceGraph& graph);

}  // namespace spillover
