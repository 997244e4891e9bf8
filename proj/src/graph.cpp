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

#include "spillover/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <Eigen/Eigenvalues>

#include "spillover/errors.hpp"

namespace spillover {

InterferenceGraph::InterferenceGraph(std::size_t n)
    : InterferenceGraph(n, std::vector<std::uint8_t>(n * n, 0), false) {}

InterferenceGraph::InterferenceGraph(std::size_t n, std::vector<std::uint8_t> adjacency,
                                     bool validate)
    : n_(n), adj_(std::move(adjacency)) {
  if (n_ == 0) throw ValidationError("interference graph needs at least one unit");
  if (adj_.size() != n_ * n_) {
    throw ValidationError("adjacency has " + std::to_string(adj_.size()) +
                          " entries, expected " + std::to_string(n_ * n_));
  }
  if (validate) {
    for (std::size_t i = 0; i < n_; ++i) {
      if (adj_[i * n_ + i] != 0) {
        throw ValidationError("self-loop at unit " + std::to_string(i));
      }
      for (std::size_t j = i + 1; j < n_; ++j) {
        const auto a = adj_[i * n_ + j];
        if (a > 1) throw ValidationError("adjacency entries must be 0 or 1");
        if (a != adj_[j * n_ + i]) {
          throw ValidationError("asymmetric adjacency at (" + std::to_string(i) + ", " +
                                std::to_string(j) + ")");
        }
      }
    }
  }
  build_cache();
}

void InterferenceGraph::build_cache() {
  degrees_.assign(n_, 0);
  neighbors_.assign(n_, {});
  edge_count_ = 0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      if (adj_[i * n_ + j]) {
        neighbors_[i].push_back(j);
        if (j > i) ++edge_count_;
      }
    }
    degrees_[i] = neighbors_[i].size();
  }
}

InterferenceGraph InterferenceGraph::from_edges(std::size_t n, std::span<const Edge> edges) {
  if (n == 0) throw ValidationError("interference graph needs at least one unit");
  std::vector<std::uint8_t> adj(n * n, 0);
  for (const auto& [i, j] : edges) {
    if (i >= n || j >= n) {
      throw ValidationError("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") out of range for n = " + std::to_string(n));
    }
    if (i == j) throw ValidationError("self-loop at unit " + std::to_string(i));
    if (adj[i * n + j]) {
      throw ValidationError("duplicate edge (" + std::to_string(i) + ", " +
                            std::to_string(j) + ")");
    }
    adj[i * n + j] = 1;
    adj[j * n + i] = 1;
  }
  return InterferenceGraph(n, std::move(adj), false);
}

InterferenceGraph InterferenceGraph::from_adjacency(std::size_t n,
                                                    std::vector<std::uint8_t> adjacency) {
  return InterferenceGraph(n, std::move(adjacency), true);
}

std::vector<Edge> InterferenceGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j : neighbors_[i]) {
      if (j > i) out.emplace_back(i, j);
    }
  }
  return out;
}

Eigen::MatrixXd InterferenceGraph::dense() const {
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j : neighbors_[i]) z(i, j) = 1.0;
  }
  return z;
}

Eigen::SparseMatrix<double> InterferenceGraph::sparse() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * edge_count_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j : neighbors_[i]) triplets.emplace_back(i, j, 1.0);
  }
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::SparseMatrix<double> z(n, n);
  z.setFromTriplets(triplets.begin(), triplets.end());
  return z;
}

RdpgParams::RdpgParams(Eigen::MatrixXd positions, double sparsity)
    : positions_(std::move(positions)), sparsity_(sparsity) {
  if (positions_.rows() == 0) throw ValidationError("RDPG needs at least one unit");
  if (positions_.cols() == 0) throw ValidationError("RDPG latent rank must be >= 1");
  if (!(sparsity_ >= 0.0 && sparsity_ <= 1.0)) {
    throw ValidationError("RDPG sparsity must lie in [0, 1]");
  }
  if (!positions_.allFinite()) throw ValidationError("RDPG positions must be finite");
  const Eigen::MatrixXd gram = sparsity_ * positions_ * positions_.transpose();
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    for (Eigen::Index j = i; j < gram.cols(); ++j) {
      const double p = gram(i, j);
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ValidationError("RDPG edge probability " + std::to_string(p) + " at (" +
                              std::to_string(i) + ", " + std::to_string(j) +
                              ") outside [0, 1]");
      }
    }
  }
}

double RdpgParams::edge_probability(std::size_t i, std::size_t j) const {
  return sparsity_ * positions_.row(i).dot(positions_.row(j));
}

BetaModelParams::BetaModelParams(Eigen::VectorXd weights) : weights_(std::move(weights)) {
  if (weights_.size() == 0) throw ValidationError("beta-model needs at least one unit");
  if (!weights_.allFinite()) throw ValidationError("beta-model weights must be finite");
}

double logistic(double s) noexcept {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

double BetaModelParams::edge_probability(std::size_t i, std::size_t j) const {
  return logistic(weights_[i] + weights_[j]);
}

namespace {

template <class Prob>
InterferenceGraph sample_independent_edges(std::size_t n, Prob&& prob, Rng& rng) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.bernoulli(prob(i, j))) edges.emplace_back(i, j);
    }
  }
  return InterferenceGraph::from_edges(n, edges);
}

}  // namespace

InterferenceGraph sample_rdpg(const RdpgParams& params, Rng& rng) {
  const Eigen::MatrixXd& a = params.positions();
  const double rho = params.sparsity();
  return sample_independent_edges(
      params.size(), [&](std::size_t i, std::size_t j) { return rho * a.row(i).dot(a.row(j)); },
      rng);
}

InterferenceGraph sample_beta_model(const BetaModelParams& params, Rng& rng) {
  return sample_independent_edges(
      params.size(), [&](std::size_t i, std::size_t j) { return params.edge_probability(i, j); },
      rng);
}

Eigen::MatrixXd sample_latent_beta(std::size_t n, double a, double b, Rng& rng) {
  if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("Beta shapes must be positive");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), 1);
  for (std::size_t i = 0; i < n; ++i) out(i, 0) = rng.beta(a, b);
  return out;
}

PathCountMatrix path_count_matrix(const InterferenceGraph& graph, unsigned d) {
  const auto n = static_cast<Eigen::Index>(graph.size());
  PathCountMatrix walks = PathCountMatrix::Identity(n, n);
  for (unsigned step = 0; step < d; ++step) {
    PathCountMatrix next = PathCountMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < n; ++k) {
        const std::uint64_t w = walks(i, k);
        if (w == 0) continue;
        for (std::size_t a : graph.neighbors(static_cast<std::size_t>(k))) {
          std::uint64_t sum = 0;
          if (__builtin_add_overflow(next(i, a), w, &sum)) {
            throw NumericalError("path count overflow at length " + std::to_string(step + 1));
          }
          next(i, a) = sum;
        }
      }
    }
    walks = std::move(next);
  }
  return walks;
}

std::vector<std::size_t> distance_to_nearest(const InterferenceGraph& graph,
                                             std::span<const std::size_t> sources,
                                             std::span<const std::size_t> marked) {
  if (sources.empty()) throw ValidationError("distance_to_nearest needs at least one source");
  const std::size_t n = graph.size();
  std::vector<std::size_t> dist(n, kUnreachable);
  std::deque<std::size_t> queue;
  for (std::size_t m : marked) {
    if (m >= n) throw ValidationError("marked unit out of range");
    if (dist[m] != 0) {
      dist[m] = 0;
      queue.push_back(m);
    }
  }
  // Multi-source BFS from the marked set; undirected, so this gives the
  // distance from every unit to its nearest marked unit.
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t v : graph.neighbors(u)) {
      if (dist[v] == kUnreachable) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  std::vector<std::size_t> out;
  out.reserve(sources.size());
  for (std::size_t s : sources) {
    if (s >= n) throw ValidationError("source unit out of range");
    out.push_back(dist[s]);
  }
  return out;
}

double spectral_radius(const InterferenceGraph& graph) {
  if (graph.edge_count() == 0) return 0.0;
  const Eigen::SparseMatrix<double> z = graph.sparse();
  const auto n = z.rows();
  // Power iteration on Z + I: the shift keeps bipartite components from
  // oscillating, and a positive start vector overlaps every Perron vector.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n).normalized();
  double theta = 0.0;
  for (int iter = 0; iter < 20000; ++iter) {
    Eigen::VectorXd w = z * v + v;
    const double next = v.dot(w) - 1.0;
    const double norm = w.norm();
    w /= norm;
    const double resid = (z * w - (next)*w).norm();
    v = std::move(w);
    if (std::abs(next - theta) <= 1e-14 * std::max(1.0, next) && resid <= 1e-9 * next) {
      return next;
    }
    theta = next;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(graph.dense(), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("eigenvalue solve failed");
  return eig.eigenvalues().maxCoeff();
}

}  // namespace spillover
