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

#include "spillover/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "spillover/errors.hpp"

namespace spillover {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ValidationError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                          std::to_string(b) + ")");
  }
}

void check_positivity(std::span<const double> probabilities, const ExposureLevel& d) {
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (!(probabilities[i] > 0.0)) {
      throw PositivityError(i, "positivity violated: unit " + std::to_string(i) +
                                   " has zero probability of exposure " + to_string(d));
    }
  }
}

std::vector<ExposureLevel> distinct_levels(std::span<const ExposureLevel> exposures) {
  std::vector<ExposureLevel> levels(exposures.begin(), exposures.end());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  return levels;
}

Eigen::VectorXd features(const Eigen::VectorXd& c) {
  Eigen::VectorXd z(c.size() + 1);
  z[0] = 1.0;
  z.tail(c.size()) = c;
  return z;
}

}  // namespace

double ht_direct(const Eigen::VectorXd& y, const TreatmentAssignment& x,
                 std::span<const double> probabilities) {
  const std::size_t n = x.size();
  check_lengths(static_cast<std::size_t>(y.size()), n, "ht_direct");
  check_lengths(probabilities.size(), n, "ht_direct");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = probabilities[i];
    if (!(p > 0.0 && p < 1.0)) {
      throw PositivityError(i, "treatment probability of unit " + std::to_string(i) +
                                   " must lie in (0, 1)");
    }
    acc += x.treated(i) ? y[i] / p : -y[i] / (1.0 - p);
  }
  return acc / static_cast<double>(n);
}

double ht_exposure_mean(const Eigen::VectorXd& y, std::span<const ExposureLevel> exposures,
                        std::span<const double> probabilities, const ExposureLevel& d) {
  const std::size_t n = exposures.size();
  check_lengths(static_cast<std::size_t>(y.size()), n, "ht_exposure_mean");
  check_lengths(probabilities.size(), n, "ht_exposure_mean");
  check_positivity(probabilities, d);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (exposures[i] == d) acc += y[i] / probabilities[i];
  }
  return acc / static_cast<double>(n);
}

double hajek_exposure_mean(const Eigen::VectorXd& y, std::span<const ExposureLevel> exposures,
                           std::span<const double> probabilities, const ExposureLevel& d) {
  const std::size_t n = exposures.size();
  check_lengths(static_cast<std::size_t>(y.size()), n, "hajek_exposure_mean");
  check_lengths(probabilities.size(), n, "hajek_exposure_mean");
  check_positivity(probabilities, d);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (exposures[i] == d) {
      num += y[i] / probabilities[i];
      den += 1.0 / probabilities[i];
    }
  }
  if (den == 0.0) {
    throw ValidationError("Hajek estimate undefined: no unit exposed to " + to_string(d));
  }
  return num / den;
}

double PropensityModel::operator()(const ExposureLevel& d, const Eigen::VectorXd& c) const {
  const auto it = std::lower_bound(levels_.begin(), levels_.end(), d);
  if (it == levels_.end() || *it != d) return 0.0;
  const Eigen::VectorXd eta = coef_ * features(c);
  const double shift = eta.maxCoeff();
  const Eigen::ArrayXd e = (eta.array() - shift).exp();
  return e[std::distance(levels_.begin(), it)] / e.sum();
}

PropensityFn PropensityModel::as_function() const {
  return [model = *this](const ExposureLevel& d, const Eigen::VectorXd& c) { return model(d, c); };
}

PropensityModel fit_propensity(std::span<const ExposureLevel> exposures,
                               const ConfounderMatrix& confounders) {
  const std::size_t n = exposures.size();
  check_lengths(static_cast<std::size_t>(confounders.rows()), n, "fit_propensity");
  if (n == 0) throw ValidationError("fit_propensity needs data");
  if (!confounders.allFinite()) throw ValidationError("confounders must be finite");

  PropensityModel model;
  model.levels_ = distinct_levels(exposures);
  const auto levels = static_cast<Eigen::Index>(model.levels_.size());
  const Eigen::Index p = confounders.cols();
  const Eigen::Index q = p + 1;
  model.coef_ = Eigen::MatrixXd::Zero(levels, q);

  std::vector<Eigen::Index> label(n);
  for (std::size_t i = 0; i < n; ++i) {
    label[i] = std::distance(model.levels_.begin(),
                             std::lower_bound(model.levels_.begin(), model.levels_.end(),
                                              exposures[i]));
  }
  if (levels == 1) return model;

  if (p == 0) {
    // Frequency table: intercepts are log-odds against the reference level.
    std::vector<double> count(static_cast<std::size_t>(levels), 0.0);
    for (auto l : label) count[static_cast<std::size_t>(l)] += 1.0;
    for (Eigen::Index l = 1; l < levels; ++l) {
      model.coef_(l, 0) = std::log(count[static_cast<std::size_t>(l)] / count[0]);
    }
    return model;
  }

  Eigen::MatrixXd z(static_cast<Eigen::Index>(n), q);
  z.col(0).setOnes();
  z.rightCols(p) = confounders;

  const Eigen::Index dim = (levels - 1) * q;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  auto probs_at = [&](const Eigen::VectorXd& th) {
    Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), levels);
    for (Eigen::Index l = 1; l < levels; ++l) eta.col(l) = z * th.segment((l - 1) * q, q);
    Eigen::VectorXd shift = eta.rowwise().maxCoeff();
    Eigen::MatrixXd e = (eta.colwise() - shift).array().exp().matrix();
    Eigen::VectorXd norm = e.rowwise().sum();
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      ll += eta(ii, label[i]) - shift[ii] - std::log(norm[ii]);
    }
    e.array().colwise() /= norm.array();
    return std::pair{e, ll};
  };

  auto [prob, ll] = probs_at(theta);
  bool converged = false;
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const Eigen::VectorXd zi = z.row(ii).transpose();
      const Eigen::MatrixXd zz = zi * zi.transpose();
      for (Eigen::Index l = 1; l < levels; ++l) {
        const double resid = (label[i] == l ? 1.0 : 0.0) - prob(ii, l);
        grad.segment((l - 1) * q, q) += resid * zi;
        for (Eigen::Index m = 1; m < levels; ++m) {
          const double w = prob(ii, l) * ((l == m ? 1.0 : 0.0) - prob(ii, m));
          info.block((l - 1) * q, (m - 1) * q, q, q) += w * zz;
        }
      }
    }
    if (grad.lpNorm<Eigen::Infinity>() <= 1e-9 * static_cast<double>(n)) {
      converged = true;
      break;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      throw NumericalError("propensity fit: degenerate design matrix (singular information)");
    }
    const Eigen::VectorXd step = ldlt.solve(grad);
    double scale = 1.0;
    for (int half = 0; half < 30; ++half, scale *= 0.5) {
      const Eigen::VectorXd cand = theta + scale * step;
      auto [cp, cll] = probs_at(cand);
      if (cll >= ll - 1e-12 * std::abs(ll)) {
        theta = cand;
        prob = std::move(cp);
        ll = cll;
        break;
      }
    }
    if (theta.lpNorm<Eigen::Infinity>() > 50.0) {
      throw NumericalError("propensity fit: coefficients diverge (separation)");
    }
  }
  if (!converged) throw NumericalError("propensity fit did not converge (possible separation)");
  // The gradient also vanishes when every label is predicted with certainty.
  double worst = 1.0;
  for (std::size_t i = 0; i < n; ++i) worst = std::min(worst, prob(static_cast<Eigen::Index>(i), label[i]));
  if (worst > 1.0 - 1e-6 || theta.lpNorm<Eigen::Infinity>() > 50.0) {
    throw NumericalError("propensity fit: labels perfectly separated by the confounders");
  }
  for (Eigen::Index l = 1; l < levels; ++l) {
    model.coef_.row(l) = theta.segment((l - 1) * q, q).transpose();
  }
  return model;
}

double OutcomeRegression::operator()(const ExposureLevel& d, const Eigen::VectorXd& c) const {
  const auto it = std::lower_bound(levels_.begin(), levels_.end(), d);
  if (it == levels_.end() || *it != d) {
    throw ValidationError("outcome regression has no fit for level " + to_string(d));
  }
  return coef_[static_cast<std::size_t>(std::distance(levels_.begin(), it))].dot(features(c));
}

RegressionFn OutcomeRegression::as_function() const {
  return [model = *this](const ExposureLevel& d, const Eigen::VectorXd& c) { return model(d, c); };
}

Eigen::VectorXd OutcomeRegression::fitted(std::span<const ExposureLevel> exposures,
                                          const ConfounderMatrix& confounders) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(exposures.size()));
  for (std::size_t i = 0; i < exposures.size(); ++i) {
    out[i] = (*this)(exposures[i], confounders.row(static_cast<Eigen::Index>(i)).transpose());
  }
  return out;
}

OutcomeRegression fit_outcome_regression(const Eigen::VectorXd& y,
                                         std::span<const ExposureLevel> exposures,
                                         const ConfounderMatrix& confounders) {
  const std::size_t n = exposures.size();
  check_lengths(static_cast<std::size_t>(y.size()), n, "fit_outcome_regression");
  check_lengths(static_cast<std::size_t>(confounders.rows()), n, "fit_outcome_regression");
  if (!confounders.allFinite() || !y.allFinite()) {
    throw ValidationError("regression inputs must be finite");
  }
  OutcomeRegression model;
  model.levels_ = distinct_levels(exposures);
  const Eigen::Index q = confounders.cols() + 1;
  for (const ExposureLevel& level : model.levels_) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (exposures[i] == level) rows.push_back(static_cast<Eigen::Index>(i));
    }
    const auto r = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd design(r, q);
    Eigen::VectorXd target(r);
    for (Eigen::Index k = 0; k < r; ++k) {
      design(k, 0) = 1.0;
      design.row(k).tail(q - 1) = confounders.row(rows[static_cast<std::size_t>(k)]);
      target[k] = y[rows[static_cast<std::size_t>(k)]];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < q) {
      throw NumericalError("outcome regression: degenerate design matrix at level " +
                           to_string(level));
    }
    model.coef_.push_back(qr.solve(target));
  }
  return model;
}

double dr_exposure_mean(const Eigen::VectorXd& y, std::span<const ExposureLevel> exposures,
                        const ConfounderMatrix& confounders, const ExposureLevel& d,
                        const PropensityFn& propensity, const RegressionFn& regression) {
  const std::size_t n = exposures.size();
  check_lengths(static_cast<std::size_t>(y.size()), n, "dr_exposure_mean");
  check_lengths(static_cast<std::size_t>(confounders.rows()), n, "dr_exposure_mean");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd c = confounders.row(static_cast<Eigen::Index>(i)).transpose();
    const double psi = propensity(d, c);
    if (!(psi > 0.0)) {
      throw PositivityError(i, "positivity violated: estimated propensity of unit " +
                                   std::to_string(i) + " at " + to_string(d) + " is zero");
    }
    const double m = regression(d, c);
    acc += m;
    if (exposures[i] == d) acc += (y[i] - m) / psi;
  }
  return acc / static_cast<double>(n);
}

}  // namespace spillover
