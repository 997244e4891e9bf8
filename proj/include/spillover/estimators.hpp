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
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spillover/designs.hpp"
#include "spillover/exposure.hpp"
#include "spillover/graph.hpp"
#include "spillover/outcome_models.hpp"

namespace spillover {

// n x p, finite. p may be 0.
using ConfounderMatrix = Eigen::MatrixXd;

// (1/N) sum_i [y_i 1(x_i = 1) / pi_i - y_i 1(x_i = 0) / (1 - pi_i)].
double ht_direct(const Eigen::VectorXd& y, const TreatmentAssignment& x,
                 std::span<const double> probabilities);

// Horvitz-Thompson mean of the level-d potential outcomes. Every unit needs a
// positive probability of exposure d; otherwise PositivityError names it.
double ht_exposure_mean(const Eigen::VectorXd& y, std::span<const ExposureLevel> exposures,
                        std::span<const double> probabilities, const ExposureLevel& d);

// Inverse-probability-weighted mean of y over units exposed to d. Throws
// ValidationError when no unit is exposed to d.
double hajek_exposure_mean(const Eigen::VectorXd& y, std::span<const ExposureLevel> exposures,
                           std::span<const double> probabilities, const ExposureLevel& d);

inline double exposure_contrast(double mean_d1, double mean_d2) { return mean_d1 - mean_d2; }

// Nuisance evaluators take a level and one row of confounders.
using PropensityFn = std::function<double(const ExposureLevel&, const Eigen::VectorXd&)>;
using RegressionFn = std::function<double(const ExposureLevel&, const Eigen::VectorXd&)>;

// Multinomial logistic model over the observed levels, first level as the
// reference. With p = 0 the fit is the frequency table.
class PropensityModel {
 public:
  const std::vector<ExposureLevel>& levels() const noexcept { return levels_; }
  // rows: levels, columns: intercept then confounders; the reference row is 0.
  const Eigen::MatrixXd& coefficients() const noexcept { return coef_; }
  // Returns 0 for levels not seen during fitting.
  double operator()(const ExposureLevel& d, const Eigen::VectorXd& c) const;
  PropensityFn as_function() const;

 private:
  friend PropensityModel fit_propensity(std::span<const ExposureLevel>, const ConfounderMatrix&);
  std::vector<ExposureLevel> levels_;
  Eigen::MatrixXd coef_;
};

// Newton-Raphson maximum likelihood. Throws NumericalError on separation or a
// singular information matrix.
PropensityModel fit_propensity(std::span<const ExposureLevel> exposures,
                               const ConfounderMatrix& confounders);

// Least squares of y on level indicators interacted with an intercept and the
// confounders, i.e. one regression per level.
class OutcomeRegression {
 public:
  const std::vector<ExposureLevel>& levels() const noexcept { return levels_; }
  // Throws ValidationError for a level absent from the fit.
  double operator()(const ExposureLevel& d, const Eigen::VectorXd& c) const;
  RegressionFn as_function() const;
  Eigen::VectorXd fitted(std::span<const ExposureLevel> exposures,
                         const ConfounderMatrix& confounders) const;

 private:
  friend OutcomeRegression fit_outcome_regression(const Eigen::VectorXd&,
                                                  std::span<const ExposureLevel>,
                                                  const ConfounderMatrix&);
  std::vector<ExposureLevel> levels_;
  std::vector<Eigen::VectorXd> coef_;
};

OutcomeRegression fit_outcome_regression(const Eigen::VectorXd& y,
                                         std::span<const ExposureLevel> exposures,
                                         const ConfounderMatrix& confounders);

// (1/N) sum_i [(y_i - m(d; C_i)) 1(f_i = d) / psi(d; C_i) + m(d; C_i)].
double dr_exposure_mean(const Eigen::VectorXd& y, std::span<const ExposureLevel> exposures,
                        const ConfounderMatrix& confounders, const ExposureLevel& d,
                        const PropensityFn& propensity, const RegressionFn& regression);

}  // namespace spillover
