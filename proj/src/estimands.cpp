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

#include "spillover/estimands.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "spillover/errors.hpp"

namespace spillover {

std::string to_string(Estimand e) {
  switch (e) {
    case Estimand::kDirect: return "direct";
    case Estimand::kIndirect: return "indirect";
    case Estimand::kTotal: return "total";
    case Estimand::kAllOrNothing: return "all_or_nothing";
    case Estimand::kExposureContrast: return "exposure_contrast";
    case Estimand::kWelfare: return "welfare";
  }
  return "unknown";
}

std::string to_string(EstimationMethod m) {
  switch (m) {
    case EstimationMethod::kEnumeration: return "enumeration";
    case EstimationMethod::kMonteCarlo: return "monte_carlo";
    case EstimationMethod::kClosedForm: return "closed_form";
  }
  return "unknown";
}

namespace {

EffectEstimate exact(Estimand e, double value, EstimationMethod m) {
  return EffectEstimate{e, value, std::nullopt, m, std::nullopt};
}

void check_enumerable(std::size_t n) {
  if (n > kEstimandEnumerationCap) {
    throw ValidationError("estimand enumeration cap is " + std::to_string(kEstimandEnumerationCap) +
                          " units, got " + std::to_string(n));
  }
}

// E Y(x) for every assignment, indexed by TreatmentAssignment::from_index.
std::vector<Eigen::VectorXd> all_means(const OutcomeMeanModel& model) {
  const std::size_t n = model.size();
  std::vector<Eigen::VectorXd> means;
  means.reserve(std::size_t{1} << n);
  for (std::uint64_t k = 0; k < (std::uint64_t{1} << n); ++k) {
    means.push_back(model.mean(TreatmentAssignment::from_index(n, k)));
  }
  return means;
}

double bernoulli_probability(const std::vector<double>& p, std::uint64_t k) {
  const std::size_t n = p.size();
  double prob = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    const bool treated = (k >> (n - 1 - j)) & 1U;
    prob *= treated ? p[j] : 1.0 - p[j];
  }
  return prob;
}

}  // namespace

EffectEstimate tau_all(const OutcomeMeanModel& model) {
  const std::size_t n = model.size();
  const Eigen::VectorXd diff =
      model.mean(TreatmentAssignment::ones(n)) - model.mean(TreatmentAssignment::zeros(n));
  return exact(Estimand::kAllOrNothing, diff.mean(), EstimationMethod::kEnumeration);
}

EffectTriple effects_enumeration(const OutcomeMeanModel& model, const Design& design) {
  const std::size_t n = model.size();
  check_enumerable(n);
  design.check_size(n);
  const std::vector<double>& p = design.as_bernoulli().probabilities;
  const std::vector<Eigen::VectorXd> means = all_means(model);

  double direct = 0.0;
  double indirect = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << (n - 1 - i);
    for (std::uint64_t k = 0; k < means.size(); ++k) {
      if (k & bit) continue;
      // Law of X_{-i}: the full Bernoulli probability with unit i's factor removed.
      const double w = bernoulli_probability(p, k) / (1.0 - p[i]);
      const Eigen::VectorXd d = means[k | bit] - means[k];
      direct += w * d[i];
      indirect += w * (d.sum() - d[i]);
    }
  }
  direct /= static_cast<double>(n);
  indirect /= static_cast<double>(n);
  return {exact(Estimand::kDirect, direct, EstimationMethod::kEnumeration),
          exact(Estimand::kIndirect, indirect, EstimationMethod::kEnumeration),
          exact(Estimand::kTotal, direct + indirect, EstimationMethod::kEnumeration)};
}

EffectTriple effects_monte_carlo(const OutcomeMeanModel& model, const Design& design,
                                 std::size_t replications, Rng& rng) {
  if (replications < 2) throw ValidationError("Monte Carlo needs at least 2 replications");
  const std::size_t n = model.size();
  design.check_size(n);
  Eigen::VectorXd direct(static_cast<Eigen::Index>(replications));
  Eigen::VectorXd indirect(static_cast<Eigen::Index>(replications));
  for (std::size_t r = 0; r < replications; ++r) {
    const TreatmentAssignment x = sample_assignment(design, n, rng);
    const FlipEffects fe = model.flip_effects(x);
    direct[r] = fe.own.mean();
    indirect[r] = fe.others.mean();
  }
  const Eigen::VectorXd total = direct + indirect;
  const double rr = static_cast<double>(replications);
  auto se = [rr](const Eigen::VectorXd& v) {
    const double var = (v.array() - v.mean()).square().sum() / (rr - 1.0);
    return std::sqrt(var / rr);
  };
  auto mc = [&](Estimand e, const Eigen::VectorXd& v, double value) {
    return EffectEstimate{e, value, se(v), EstimationMethod::kMonteCarlo, replications};
  };
  return {mc(Estimand::kDirect, direct, direct.mean()),
          mc(Estimand::kIndirect, indirect, indirect.mean()),
          mc(Estimand::kTotal, total, direct.mean() + indirect.mean())};
}

double amplification_factor(const Eigen::MatrixXd& positions, double delta) {
  if (!(std::abs(delta) < 1.0)) throw ValidationError("delta must satisfy |delta| < 1");
  const auto n = positions.rows();
  const auto k = positions.cols();
  if (n == 0 || k == 0) throw ValidationError("positions must be a nonempty N x K matrix");
  if (delta == 0.0) return 0.0;
  const Eigen::MatrixXd gram = positions.transpose() * positions;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double spectral_sq = eig.eigenvalues().maxCoeff();
  const Eigen::MatrixXd inner =
      spectral_sq * Eigen::MatrixXd::Identity(k, k) - delta * gram;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(inner);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    throw NumericalError("amplification factor: ||alpha||^2 I - delta alpha^T alpha is singular");
  }
  const Eigen::VectorXd s = positions.colwise().sum().transpose();
  return delta * s.dot(lu.solve(s)) / static_cast<double>(n);
}

EffectTriple closed_form_effects_from_amplification(double beta, double gamma, double a) {
  return {exact(Estimand::kDirect, beta, EstimationMethod::kClosedForm),
          exact(Estimand::kIndirect, gamma + (beta + gamma) * a, EstimationMethod::kClosedForm),
          exact(Estimand::kTotal, (beta + gamma) * (1.0 + a), EstimationMethod::kClosedForm)};
}

EffectTriple closed_form_effects(double beta, double gamma, double delta,
                                 const Eigen::MatrixXd& positions) {
  return closed_form_effects_from_amplification(beta, gamma,
                                                amplification_factor(positions, delta));
}

SensitivityCheck sensitivity_check(const OutcomeMeanModel& model, std::vector<double> probabilities,
                                   double step) {
  const std::size_t n = model.size();
  check_enumerable(n);
  const Design design = Design::bernoulli(probabilities);
  design.check_size(n);
  for (double p : probabilities) {
    if (p - step <= 0.0 || p + step >= 1.0) {
      throw ValidationError("finite-difference step leaves (0, 1)");
    }
  }
  const std::vector<Eigen::VectorXd> means = all_means(model);
  std::vector<double> sums(means.size());
  for (std::size_t k = 0; k < means.size(); ++k) sums[k] = means[k].sum();

  // Sum over units of E_pi Y_i; its gradient in pi carries all cross terms.
  auto expected_sum = [&](const std::vector<double>& p) {
    double acc = 0.0;
    for (std::size_t k = 0; k < sums.size(); ++k) acc += bernoulli_probability(p, k) * sums[k];
    return acc;
  };

  double derivative_sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> up = probabilities;
    std::vector<double> down = probabilities;
    up[j] += step;
    down[j] -= step;
    derivative_sum += (expected_sum(up) - expected_sum(down)) / (2.0 * step);
  }
  derivative_sum /= static_cast<double>(n);
  const double total = effects_enumeration(model, design).total.value;
  return {total, derivative_sum, std::abs(total - derivative_sum)};
}

EffectEstimate welfare(const OutcomeMeanModel& model, const TreatmentAssignment& x) {
  return exact(Estimand::kWelfare, model.mean(x).mean(), EstimationMethod::kEnumeration);
}

namespace {

bool improves(double candidate, double incumbent) {
  return candidate > incumbent + 1e-12 * (1.0 + std::abs(incumbent));
}

}  // namespace

OptimizedAssignment optimize_assignment(const OutcomeMeanModel& model, SearchMethod method,
                                        std::optional<std::size_t> budget) {
  const std::size_t n = model.size();
  if (method == SearchMethod::kExhaustive) {
    if (n > kEnumerationCap) {
      throw ValidationError("exhaustive search cap is " + std::to_string(kEnumerationCap) +
                            " units, got " + std::to_string(n));
    }
    std::optional<OptimizedAssignment> best;
    for (std::uint64_t k = 0; k < (std::uint64_t{1} << n); ++k) {
      TreatmentAssignment x = TreatmentAssignment::from_index(n, k);
      if (budget && x.treated_count() > *budget) continue;
      const double w = model.mean(x).mean();
      if (!best || improves(w, best->welfare)) best = OptimizedAssignment{std::move(x), w};
    }
    return *best;
  }

  OptimizedAssignment current{TreatmentAssignment::zeros(n), 0.0};
  current.welfare = model.mean(current.assignment).mean();
  std::size_t treated = 0;
  for (;;) {
    std::optional<std::size_t> best_flip;
    double best_w = current.welfare;
    for (std::size_t i = 0; i < n; ++i) {
      const bool on = current.assignment.treated(i);
      if (!on && budget && treated >= *budget) continue;
      const double w = model.mean(current.assignment.with(i, !on)).mean();
      if (improves(w, best_w)) {
        best_w = w;
        best_flip = i;
      }
    }
    if (!best_flip) return current;
    const bool on = current.assignment.treated(*best_flip);
    current.assignment.set(*best_flip, !on);
    treated = on ? treated - 1 : treated + 1;
    current.welfare = best_w;
  }
}

}  // namespace spillover
