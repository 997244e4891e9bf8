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
#include <vector>

#include <Eigen/Dense>

#include "spillover/designs.hpp"
#include "spillover/estimands.hpp"
#include "spillover/graph.hpp"
#include "spillover/outcome_models.hpp"

namespace spillover {

struct MleFit {
  double beta_hat = 0.0;
  double gamma_hat = 0.0;
  double delta_hat = 0.0;
  double sigma2_hat = 1.0;
  double loglik = 0.0;
  bool delta_at_boundary = false;

  GmrfParams as_params(Scaling treatment, Scaling outcome) const;
};

struct MleOptions {
  std::size_t grid_points = 201;
  double boundary_margin = 1e-3;
  Scaling treatment_scaling = Scaling::degree();
  Scaling outcome_scaling = Scaling::degree();
  // Known own-treatment boost, if the data were generated with one.
  std::optional<Boost> boost;
};

struct ProfilePoint {
  double delta;
  double loglik;
};

// Profile likelihood of the GMRF in delta. Construction eigendecomposes the
// symmetrized outcome operator once; each evaluation is then O(N): GLS for
// (beta, gamma) and the closed-form sigma^2 given delta.
class GmrfProfileLikelihood {
 public:
  GmrfProfileLikelihood(const InterferenceGraph& graph, const TreatmentAssignment& x,
                        const Eigen::VectorXd& y, const MleOptions& options);

  // Feasible when 1 - delta * lambda_k > 0 for all eigenvalues.
  bool feasible(double delta) const;
  MleFit at(double delta) const;
  double min_feasible_delta() const noexcept { return lo_; }
  double max_feasible_delta() const noexcept { return hi_; }

 private:
  std::size_t n_;
  Eigen::VectorXd lambda_;
  Eigen::VectorXd rot_y_;
  Eigen::VectorXd rot_wy_;
  Eigen::MatrixXd rot_x_;
  double log_det_k_ = 0.0;
  double lo_ = -1.0;
  double hi_ = 1.0;
};

// Grid over [-1 + m, 1 - m] (ties to the smaller delta), refined by golden
// section around the grid maximum. Throws ValidationError for n < 4 or
// degenerate regressors (e.g. constant x).
MleFit gmrf_mle(const InterferenceGraph& graph, const TreatmentAssignment& x,
                const Eigen::VectorXd& y, const MleOptions& options = {});

// Same search, also returning every evaluated profile point.
MleFit gmrf_mle(const InterferenceGraph& graph, const TreatmentAssignment& x,
                const Eigen::VectorXd& y, const MleOptions& options,
                std::vector<ProfilePoint>& evaluated);

// Closed-form effects at the fitted coefficients with known positions.
EffectTriple plugin_effects(const MleFit& fit, const Eigen::MatrixXd& positions);

}  // namespace spillover
