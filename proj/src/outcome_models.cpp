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

#include "spillover/outcome_models.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "spillover/errors.hpp"

namespace spillover {

void GmrfParams::validate() const {
  if (!std::isfinite(beta) || !std::isfinite(gamma) || !std::isfinite(delta)) {
    throw ValidationError("GMRF coefficients must be finite");
  }
  if (!(std::abs(delta) < 1.0)) {
    throw ValidationError("delta must satisfy |delta| < 1, got " + std::to_string(delta));
  }
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw ValidationError("sigma2 must be positive, got " + std::to_string(sigma2));
  }
  for (const Scaling& s : {treatment_scaling, outcome_scaling}) {
    if (s.kind == Scaling::Kind::kConstant && !(s.constant > 0.0 && std::isfinite(s.constant))) {
      throw ValidationError("constant scaling must be positive, got " +
                            std::to_string(s.constant));
    }
  }
  if (boost) {
    if (!std::isfinite(boost->epsilon)) throw ValidationError("boost epsilon must be finite");
    for (auto u : boost->indicator) {
      if (u > 1) throw ValidationError("boost indicator must be binary");
    }
  }
}

Eigen::SparseMatrix<double> spillover_operator(const InterferenceGraph& graph, Scaling scaling) {
  const std::size_t n = graph.size();
  double c = scaling.constant;
  if (scaling.kind == Scaling::Kind::kSpectral) {
    const double lambda = spectral_radius(graph);
    c = lambda > 0.0 ? 1.0 / lambda : 0.0;
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * graph.edge_count());
  for (std::size_t i = 0; i < n; ++i) {
    const double ci = scaling.kind == Scaling::Kind::kDegree
                          ? (graph.degree(i) > 0 ? 1.0 / static_cast<double>(graph.degree(i)) : 0.0)
                          : c;
    for (std::size_t j : graph.neighbors(i)) triplets.emplace_back(i, j, ci);
  }
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::SparseMatrix<double> w(nn, nn);
  w.setFromTriplets(triplets.begin(), triplets.end());
  return w;
}

GmrfSystem::GmrfSystem(GmrfParams params, const InterferenceGraph& graph)
    : params_(std::move(params)), n_(graph.size()) {
  params_.validate();
  const auto n = static_cast<Eigen::Index>(n_);
  if (params_.boost && params_.boost->indicator.size() != n_) {
    throw ValidationError("boost indicator has " +
                          std::to_string(params_.boost->indicator.size()) + " entries for " +
                          std::to_string(n_) + " units");
  }
  w_treat_ = spillover_operator(graph, params_.treatment_scaling);
  w_out_ = params_.outcome_scaling == params_.treatment_scaling
               ? w_treat_
               : spillover_operator(graph, params_.outcome_scaling);

  k_ = Eigen::VectorXd::Ones(n);
  if (params_.outcome_scaling.kind == Scaling::Kind::kDegree) {
    for (std::size_t i = 0; i < n_; ++i) {
      if (graph.degree(i) > 0) k_[i] = static_cast<double>(graph.degree(i));
    }
  }
  own_coef_ = Eigen::VectorXd::Constant(n, params_.beta);
  if (params_.boost) {
    for (std::size_t i = 0; i < n_; ++i) {
      own_coef_[i] *= 1.0 + params_.boost->epsilon * params_.boost->indicator[i];
    }
  }

  Eigen::SparseMatrix<double> identity(n, n);
  identity.setIdentity();
  a_ = k_.asDiagonal() * (identity - params_.delta * w_out_);
  a_.makeCompressed();
  ldlt_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(a_);
  if (ldlt_->info() != Eigen::Success || (ldlt_->vectorD().array() <= 0.0).any()) {
    throw NumericalError(
        "GMRF precision is not positive definite; constant scaling needs "
        "|delta| * c * lambda_max(Z) < 1");
  }
}

Eigen::VectorXd GmrfSystem::drift(const TreatmentAssignment& x) const {
  if (x.size() != n_) {
    throw ValidationError("assignment has " + std::to_string(x.size()) + " entries for " +
                          std::to_string(n_) + " units");
  }
  const Eigen::VectorXd xv = x.to_vector();
  Eigen::VectorXd b = own_coef_.cwiseProduct(xv);
  if (params_.gamma != 0.0) b += params_.gamma * (w_treat_ * xv);
  return b;
}

Eigen::VectorXd GmrfSystem::solve_mean(const Eigen::VectorXd& b) const {
  Eigen::VectorXd mu = ldlt_->solve(k_.cwiseProduct(b));
  const double tol = 1e-10 * (1.0 + b.lpNorm<Eigen::Infinity>());
  for (int refine = 0; refine < 3; ++refine) {
    const Eigen::VectorXd resid = b - (mu - params_.delta * (w_out_ * mu));
    if (resid.lpNorm<Eigen::Infinity>() <= tol) return mu;
    mu += ldlt_->solve(k_.cwiseProduct(resid));
  }
  throw NumericalError("GMRF mean solve did not reach the residual tolerance");
}

Eigen::VectorXd GmrfSystem::mean(const TreatmentAssignment& x) const {
  return solve_mean(drift(x));
}

Eigen::VectorXd GmrfSystem::sample(const TreatmentAssignment& x, Rng& rng) const {
  Eigen::VectorXd mu = mean(x);
  Eigen::VectorXd xi(static_cast<Eigen::Index>(n_));
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = rng.normal();
  // A = P^T L D L^T P, so P^T L^{-T} D^{-1/2} xi has covariance A^{-1}.
  xi = xi.cwiseQuotient(ldlt_->vectorD().cwiseSqrt());
  Eigen::VectorXd e = ldlt_->matrixU().solve(xi);
  e = ldlt_->permutationPinv() * e;
  return mu + std::sqrt(params_.sigma2) * e;
}

Eigen::VectorXd GmrfSystem::mean_series(const TreatmentAssignment& x, unsigned d_max) const {
  Eigen::VectorXd term = drift(x);
  Eigen::VectorXd sum = term;
  for (unsigned d = 1; d <= d_max; ++d) {
    term = params_.delta * (w_out_ * term);
    sum += term;
  }
  return sum;
}

double GmrfSystem::log_det_precision() const {
  return ldlt_->vectorD().array().log().sum() - static_cast<double>(n_) * std::log(params_.sigma2);
}

double GmrfSystem::loglik(const TreatmentAssignment& x, const Eigen::VectorXd& y) const {
  if (static_cast<std::size_t>(y.size()) != n_) {
    throw ValidationError("outcome vector has wrong length");
  }
  if (!y.allFinite()) throw ValidationError("outcome vector must be finite");
  const Eigen::VectorXd r = y - mean(x);
  const double quad = r.dot(a_ * r) / params_.sigma2;
  return 0.5 * log_det_precision() - 0.5 * quad -
         0.5 * static_cast<double>(n_) * std::log(2.0 * std::numbers::pi);
}

Eigen::MatrixXd GmrfSystem::precision() const {
  return Eigen::MatrixXd(a_) / params_.sigma2;
}

const Eigen::MatrixXd& GmrfSystem::mean_operator() const {
  std::call_once(inverse_once_, [this] {
    // (I - delta W_o)^{-1} = A^{-1} K
    Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(a_)};
    if (llt.info() != Eigen::Success) throw NumericalError("dense GMRF factorization failed");
    const Eigen::MatrixXd k = k_.asDiagonal();
    inverse_ = llt.solve(k);
  });
  return inverse_;
}

Eigen::VectorXd gmrf_mean(const GmrfParams& params, const InterferenceGraph& graph,
                          const TreatmentAssignment& x) {
  return GmrfSystem(params, graph).mean(x);
}

Eigen::VectorXd gmrf_sample(const GmrfParams& params, const InterferenceGraph& graph,
                            const TreatmentAssignment& x, Rng& rng) {
  return GmrfSystem(params, graph).sample(x, rng);
}

Eigen::VectorXd gmrf_mean_series(const GmrfParams& params, const InterferenceGraph& graph,
                                 const TreatmentAssignment& x, unsigned d_max) {
  return GmrfSystem(params, graph).mean_series(x, d_max);
}

double gmrf_loglik(const GmrfParams& params, const InterferenceGraph& graph,
                   const TreatmentAssignment& x, const Eigen::VectorXd& y) {
  return GmrfSystem(params, graph).loglik(x, y);
}

Eigen::VectorXd fixed_linear_outcome(const FixedLinearModel& model,
                                     const InterferenceGraph& graph,
                                     const TreatmentAssignment& x) {
  const std::size_t n = graph.size();
  if (x.size() != n) throw ValidationError("assignment length does not match the graph");
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double frac = 0.0;
    if (graph.degree(i) > 0) {
      std::size_t treated = 0;
      for (std::size_t j : graph.neighbors(i)) treated += x[j];
      frac = static_cast<double>(treated) / static_cast<double>(graph.degree(i));
    }
    y[i] = model.alpha + model.beta * x[i] + model.gamma * frac;
  }
  return y;
}

FlipEffects OutcomeMeanModel::flip_effects(const TreatmentAssignment& x) const {
  const std::size_t n = size();
  FlipEffects fe{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd d = mean(x.with(i, true)) - mean(x.with(i, false));
    fe.own[i] = d[i];
    fe.others[i] = d.sum() - d[i];
  }
  return fe;
}

Eigen::VectorXd FixedLinearMeanModel::mean(const TreatmentAssignment& x) const {
  return fixed_linear_outcome(model_, graph_, x);
}

FlipEffects FixedLinearMeanModel::flip_effects(const TreatmentAssignment& x) const {
  const std::size_t n = graph_.size();
  if (x.size() != n) throw ValidationError("assignment length does not match the graph");
  FlipEffects fe{Eigen::VectorXd::Constant(n, model_.beta), Eigen::VectorXd::Zero(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : graph_.neighbors(i)) {
      fe.others[i] += model_.gamma / static_cast<double>(graph_.degree(j));
    }
  }
  return fe;
}

FlipEffects GmrfMeanModel::flip_effects(const TreatmentAssignment& x) const {
  const std::size_t n = system_->size();
  if (x.size() != n) throw ValidationError("assignment length does not match the model");
  const Eigen::MatrixXd& m = system_->mean_operator();
  const GmrfParams& p = system_->params();
  const Eigen::SparseMatrix<double>& wt = system_->treatment_operator();

  Eigen::VectorXd own_coef = Eigen::VectorXd::Constant(n, p.beta);
  if (p.boost) {
    for (std::size_t i = 0; i < n; ++i) own_coef[i] *= 1.0 + p.boost->epsilon * p.boost->indicator[i];
  }
  const Eigen::RowVectorXd colsum = m.colwise().sum();
  // Column sums of M W_t: (1^T M) W_t.
  const Eigen::RowVectorXd colsum_wt = colsum * wt;

  FlipEffects fe{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (std::size_t i = 0; i < n; ++i) {
    double own = own_coef[i] * m(i, i);
    if (p.gamma != 0.0) {
      // (M W_t)_{ii} = sum_k M_ik (W_t)_{ki}, over the nonzeros of column i.
      double diag = 0.0;
      for (Eigen::SparseMatrix<double>::InnerIterator it(wt, static_cast<Eigen::Index>(i)); it;
           ++it) {
        diag += m(i, it.row()) * it.value();
      }
      own += p.gamma * diag;
    }
    const double total = own_coef[i] * colsum[i] + p.gamma * colsum_wt[i];
    fe.own[i] = own;
    fe.others[i] = total - own;
  }
  return fe;
}

}  // namespace spillover
