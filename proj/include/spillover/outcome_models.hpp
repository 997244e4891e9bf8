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
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "spillover/designs.hpp"
#include "spillover/graph.hpp"
#include "spillover/random.hpp"

namespace spillover {

// How neighbor sums are normalized into a spillover operator W = diag(c) Z.
//   degree:   c_i = 1 / degree_i (rows of isolated units are zero)
//   constant: c_i = c for every unit
//   spectral: c_i = 1 / lambda_max(Z), a graph-level constant
struct Scaling {
  enum class Kind { kDegree, kConstant, kSpectral };
  Kind kind = Kind::kDegree;
  double constant = 1.0;

  static Scaling degree() { return {Kind::kDegree, 1.0}; }
  static Scaling constant_value(double c) { return {Kind::kConstant, c}; }
  static Scaling spectral() { return {Kind::kSpectral, 1.0}; }

  friend bool operator==(const Scaling&, const Scaling&) = default;
};

// Own-treatment boost: the own term becomes beta * (1 + epsilon * u_i) * x_i.
struct Boost {
  double epsilon = 0.0;
  std::vector<std::uint8_t> indicator;
};

// Auto-normal outcome model with treatment spillover (gamma) and outcome
// spillover (delta). treatment_scaling normalizes the gamma term,
// outcome_scaling the delta term and the precision.
struct GmrfParams {
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  double sigma2 = 1.0;
  Scaling treatment_scaling = Scaling::degree();
  Scaling outcome_scaling = Scaling::degree();
  std::optional<Boost> boost;

  GmrfParams& with_scaling(Scaling s) {
    treatment_scaling = s;
    outcome_scaling = s;
    return *this;
  }
  // Throws ValidationError on |delta| >= 1, sigma2 <= 0, c <= 0, non-finite
  // coefficients, or a non-binary boost indicator.
  void validate() const;
};

struct FixedLinearModel {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

// Spillover operator diag(c) Z for the given scaling.
Eigen::SparseMatrix<double> spillover_operator(const InterferenceGraph& graph, Scaling scaling);

// Prepared GMRF for one (params, graph) pair. With K the conditional
// precision weights (degree_i under degree scaling, 1 otherwise) the scaled
// precision is A = K (I - delta W_o) = sigma^2 Q, symmetric positive definite.
// One sparse LDL^T factorization of A serves the mean, the sampler, and the
// likelihood. Immutable after construction except for a lazily computed dense
// inverse guarded by std::call_once, so concurrent readers are safe.
class GmrfSystem {
 public:
  GmrfSystem(GmrfParams params, const InterferenceGraph& graph);

  std::size_t size() const noexcept { return n_; }
  const GmrfParams& params() const noexcept { return params_; }
  const Eigen::SparseMatrix<double>& treatment_operator() const noexcept { return w_treat_; }
  const Eigen::SparseMatrix<double>& outcome_operator() const noexcept { return w_out_; }
  const Eigen::VectorXd& precision_weights() const noexcept { return k_; }

  // b(x) = beta (1 + eps u) .* x + gamma W_t x.
  Eigen::VectorXd drift(const TreatmentAssignment& x) const;
  // Solves (I - delta W_o) mu = b(x); asserts the relative residual bound.
  Eigen::VectorXd mean(const TreatmentAssignment& x) const;
  Eigen::VectorXd solve_mean(const Eigen::VectorXd& b) const;
  Eigen::VectorXd sample(const TreatmentAssignment& x, Rng& rng) const;
  // Truncated Neumann series sum_{d <= d_max} (delta W_o)^d b(x).
  Eigen::VectorXd mean_series(const TreatmentAssignment& x, unsigned d_max) const;
  double loglik(const TreatmentAssignment& x, const Eigen::VectorXd& y) const;

  Eigen::MatrixXd precision() const;
  double log_det_precision() const;
  // (I - delta W_o)^{-1}, computed once.
  const Eigen::MatrixXd& mean_operator() const;

 private:
  GmrfParams params_;
  std::size_t n_;
  Eigen::SparseMatrix<double> w_treat_;
  Eigen::SparseMatrix<double> w_out_;
  Eigen::VectorXd k_;
  Eigen::VectorXd own_coef_;
  Eigen::SparseMatrix<double> a_;
  std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
  mutable std::once_flag inverse_once_;
  mutable Eigen::MatrixXd inverse_;
};

Eigen::VectorXd gmrf_mean(const GmrfParams& params, const InterferenceGraph& graph,
                          const TreatmentAssignment& x);
Eigen::VectorXd gmrf_sample(const GmrfParams& params, const InterferenceGraph& graph,
                            const TreatmentAssignment& x, Rng& rng);
Eigen::VectorXd gmrf_mean_series(const GmrfParams& params, const InterferenceGraph& graph,
                                 const TreatmentAssignment& x, unsigned d_max);
double gmrf_loglik(const GmrfParams& params, const InterferenceGraph& graph,
                   const TreatmentAssignment& x, const Eigen::VectorXd& y);

// Y_i = alpha + beta x_i + gamma * (treated fraction of i's neighbors), the
// fraction being 0 for isolated units.
Eigen::VectorXd fixed_linear_outcome(const FixedLinearModel& model,
                                     const InterferenceGraph& graph,
                                     const TreatmentAssignment& x);

// Effects of flipping each unit's own treatment from 0 to 1 with everyone
// else held at x: own[i] = D_i, others[i] = sum_{j != i} D_j.
struct FlipEffects {
  Eigen::VectorXd own;
  Eigen::VectorXd others;
};

// Expected potential outcomes E Y(x) as a function of x.
class OutcomeMeanModel {
 public:
  virtual ~OutcomeMeanModel() = default;
  virtual std::size_t size() const = 0;
  virtual Eigen::VectorXd mean(const TreatmentAssignment& x) const = 0;
  // Default: two mean evaluations per unit.
  virtual FlipEffects flip_effects(const TreatmentAssignment& x) const;
};

class FixedLinearMeanModel final : public OutcomeMeanModel {
 public:
  FixedLinearMeanModel(FixedLinearModel model, const InterferenceGraph& graph)
      : model_(model), graph_(graph) {}
  std::size_t size() const override { return graph_.size(); }
  Eigen::VectorXd mean(const TreatmentAssignment& x) const override;
  FlipEffects flip_effects(const TreatmentAssignment& x) const override;

 private:
  FixedLinearModel model_;
  InterferenceGraph graph_;
};

class GmrfMeanModel final : public OutcomeMeanModel {
 public:
  explicit GmrfMeanModel(std::shared_ptr<const GmrfSystem> system) : system_(std::move(system)) {}
  GmrfMeanModel(GmrfParams params, const InterferenceGraph& graph)
      : system_(std::make_shared<GmrfSystem>(std::move(params), graph)) {}

  std::size_t size() const override { return system_->size(); }
  Eigen::VectorXd mean(const TreatmentAssignment& x) const override { return system_->mean(x); }
  // The mean is affine in x, so flip effects do not depend on x:
  // D(i) = (I - delta W_o)^{-1} (beta (1 + eps u_i) e_i + gamma W_t e_i).
  FlipEffects flip_effects(const TreatmentAssignment& x) const override;
  const GmrfSystem& system() const { return *system_; }

 private:
  std::shared_ptr<const GmrfSystem> system_;
};

}  // namespace spillover
