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

#include "spillover/gmrf_mle.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "spillover/errors.hpp"

namespace spillover {

GmrfParams MleFit::as_params(Scaling treatment, Scaling outcome) const {
  GmrfParams p;
  p.beta = beta_hat;
  p.gamma = gamma_hat;
  p.delta = delta_hat;
  p.sigma2 = sigma2_hat;
  p.treatment_scaling = treatment;
  p.outcome_scaling = outcome;
  return p;
}

GmrfProfileLikelihood::GmrfProfileLikelihood(const InterferenceGraph& graph,
                                             const TreatmentAssignment& x,
                                             const Eigen::VectorXd& y,
                                             const MleOptions& options)
    : n_(graph.size()) {
  if (n_ < 4) throw ValidationError("GMRF maximum likelihood needs at least 4 units");
  if (x.size() != n_ || static_cast<std::size_t>(y.size()) != n_) {
    throw ValidationError("assignment and outcomes must match the graph size");
  }
  if (!y.allFinite()) throw ValidationError("outcomes must be finite");
  if (x.treated_count() == 0 || x.treated_count() == n_) {
    throw ValidationError("degenerate regressors: treatment is constant");
  }
  const auto n = static_cast<Eigen::Index>(n_);

  Eigen::VectorXd own = x.to_vector();
  if (options.boost) {
    if (options.boost->indicator.size() != n_) throw ValidationError("boost indicator size");
    for (std::size_t i = 0; i < n_; ++i) {
      own[i] *= 1.0 + options.boost->epsilon * options.boost->indicator[i];
    }
  }
  const Eigen::SparseMatrix<double> w_treat = spillover_operator(graph, options.treatment_scaling);
  const Eigen::SparseMatrix<double> w_out = spillover_operator(graph, options.outcome_scaling);
  Eigen::MatrixXd regressors(n, 2);
  regressors.col(0) = own;
  regressors.col(1) = w_treat * x.to_vector();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(regressors);
  qr.setThreshold(1e-10);
  if (qr.rank() < 2) {
    throw ValidationError("degenerate regressors: own treatment and neighbor treatment are collinear");
  }

  Eigen::VectorXd k = Eigen::VectorXd::Ones(n);
  if (options.outcome_scaling.kind == Scaling::Kind::kDegree) {
    for (std::size_t i = 0; i < n_; ++i) {
      if (graph.degree(i) > 0) k[i] = static_cast<double>(graph.degree(i));
    }
  }
  log_det_k_ = k.array().log().sum();
  const Eigen::VectorXd root_k = k.cwiseSqrt();
  // S = K^{1/2} W_o K^{-1/2} is symmetric for every supported scaling.
  Eigen::MatrixXd s = Eigen::MatrixXd(w_out);
  s = root_k.asDiagonal() * s * root_k.cwiseInverse().asDiagonal();
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  lambda_ = eig.eigenvalues();
  const Eigen::MatrixXd vt = eig.eigenvectors().transpose();
  rot_y_ = vt * root_k.cwiseProduct(y);
  rot_wy_ = vt * root_k.cwiseProduct(w_out * y);
  rot_x_ = vt * (root_k.asDiagonal() * regressors);

  lo_ = -std::numeric_limits<double>::infinity();
  hi_ = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < lambda_.size(); ++i) {
    if (lambda_[i] > 1e-12) hi_ = std::min(hi_, 1.0 / lambda_[i]);
    if (lambda_[i] < -1e-12) lo_ = std::max(lo_, 1.0 / lambda_[i]);
  }
}

bool GmrfProfileLikelihood::feasible(double delta) const {
  return delta > lo_ && delta < hi_ && std::abs(delta) < 1.0;
}

MleFit GmrfProfileLikelihood::at(double delta) const {
  if (!feasible(delta)) throw ValidationError("delta outside the feasible range");
  const Eigen::ArrayXd one_minus = 1.0 - delta * lambda_.array();
  const Eigen::VectorXd omega = one_minus.inverse().matrix();
  const Eigen::VectorXd target = rot_y_ - delta * rot_wy_;
  const Eigen::Matrix2d normal = rot_x_.transpose() * omega.asDiagonal() * rot_x_;
  const Eigen::Vector2d rhs = rot_x_.transpose() * omega.cwiseProduct(target);
  const Eigen::Vector2d theta = normal.ldlt().solve(rhs);
  const Eigen::VectorXd resid = target - rot_x_ * theta;
  const double quad = resid.cwiseAbs2().dot(omega);
  const double nn = static_cast<double>(n_);

  MleFit fit;
  fit.beta_hat = theta[0];
  fit.gamma_hat = theta[1];
  fit.delta_hat = delta;
  fit.sigma2_hat = quad / nn;
  if (!(fit.sigma2_hat > 0.0)) throw NumericalError("GMRF fit interpolates the data exactly");
  fit.loglik = 0.5 * (log_det_k_ + one_minus.log().sum()) - 0.5 * nn * std::log(fit.sigma2_hat) -
               0.5 * nn - 0.5 * nn * std::log(2.0 * std::numbers::pi);
  return fit;
}

MleFit gmrf_mle(const InterferenceGraph& graph, const TreatmentAssignment& x,
                const Eigen::VectorXd& y, const MleOptions& options,
                std::vector<ProfilePoint>& evaluated) {
  if (options.grid_points < 3) throw ValidationError("delta grid needs at least 3 points");
  if (!(options.boundary_margin > 0.0 && options.boundary_margin < 1.0)) {
    throw ValidationError("boundary margin must lie in (0, 1)");
  }
  const GmrfProfileLikelihood profile(graph, x, y, options);
  const double lo = -1.0 + options.boundary_margin;
  const double hi = 1.0 - options.boundary_margin;
  const double step = (hi - lo) / static_cast<double>(options.grid_points - 1);

  evaluated.clear();
  std::optional<MleFit> best;
  std::size_t best_index = 0;
  for (std::size_t g = 0; g < options.grid_points; ++g) {
    const double delta = g + 1 == options.grid_points ? hi : lo + static_cast<double>(g) * step;
    if (!profile.feasible(delta)) continue;
    const MleFit fit = profile.at(delta);
    evaluated.push_back({delta, fit.loglik});
    if (!best || fit.loglik > best->loglik) {
      best = fit;
      best_index = g;
    }
  }
  if (!best) throw NumericalError("no feasible delta on the search grid");

  // Golden-section refinement on the bracket around the grid maximum.
  double a = std::max(best->delta_hat - step, lo);
  double b = std::min(best->delta_hat + step, hi);
  while (!profile.feasible(a)) a = 0.5 * (a + best->delta_hat);
  while (!profile.feasible(b)) b = 0.5 * (b + best->delta_hat);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  MleFit fc = profile.at(c);
  MleFit fd = profile.at(d);
  evaluated.push_back({c, fc.loglik});
  evaluated.push_back({d, fd.loglik});
  for (int iter = 0; iter < 200 && (b - a) > 1e-10; ++iter) {
    if (fc.loglik >= fd.loglik) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = profile.at(c);
      evaluated.push_back({c, fc.loglik});
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = profile.at(d);
      evaluated.push_back({d, fd.loglik});
    }
  }
  const MleFit& refined = fc.loglik >= fd.loglik ? fc : fd;
  MleFit out = refined.loglik > best->loglik ? refined : *best;
  (void)best_index;
  out.delta_at_boundary = std::abs(out.delta_hat) >= hi - step;
  return out;
}

MleFit gmrf_mle(const InterferenceGraph& graph, const TreatmentAssignment& x,
                const Eigen::VectorXd& y, const MleOptions& options) {
  std::vector<ProfilePoint> evaluated;
  return gmrf_mle(graph, x, y, options, evaluated);
}

EffectTriple plugin_effects(const MleFit& fit, const Eigen::MatrixXd& positions) {
  return closed_form_effects(fit.beta_hat, fit.gamma_hat, fit.delta_hat, positions);
}

}  // namespace spillover
