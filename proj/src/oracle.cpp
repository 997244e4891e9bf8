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

#include "spillover/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "spillover/designs.hpp"
#include "spillover/errors.hpp"
#include "spillover/estimands.hpp"
#include "spillover/estimators.hpp"
#include "spillover/exposure.hpp"
#include "spillover/graph.hpp"
#include "spillover/outcome_models.hpp"
#include "spillover/random.hpp"

namespace spillover {

namespace {

// Interference through a saturating function of the treated-neighbor
// fraction, interacted with own treatment; flip effects depend on x.
class SaturatingModel final : public OutcomeMeanModel {
 public:
  SaturatingModel(const InterferenceGraph& graph, double beta, double gamma)
      : graph_(graph), beta_(beta), gamma_(gamma) {}
  std::size_t size() const override { return graph_.size(); }
  Eigen::VectorXd mean(const TreatmentAssignment& x) const override {
    Eigen::VectorXd m(static_cast<Eigen::Index>(graph_.size()));
    for (std::size_t i = 0; i < graph_.size(); ++i) {
      double treated = 0.0;
      for (std::size_t j : graph_.neighbors(i)) treated += x[j];
      const double frac = graph_.degree(i) ? treated / static_cast<double>(graph_.degree(i)) : 0.0;
      m[static_cast<Eigen::Index>(i)] = beta_ * x[i] + gamma_ * std::tanh(2.0 * frac) * (1.0 + x[i]);
    }
    return m;
  }

 private:
  InterferenceGraph graph_;
  double beta_;
  double gamma_;
};

// Erdos-Renyi style graph with a spanning path so no unit is isolated.
InterferenceGraph random_connected_graph(std::size_t n, Rng& rng) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (rng.bernoulli(0.3)) edges.emplace_back(i, j);
    }
  }
  return InterferenceGraph::from_edges(n, edges);
}

std::vector<double> random_probabilities(std::size_t n, Rng& rng) {
  std::vector<double> p(n);
  for (double& v : p) v = 0.2 + 0.6 * rng.uniform();
  return p;
}

void record(OracleCheck& check, double discrepancy) {
  ++check.instances;
  check.worst = std::max(check.worst, discrepancy);
  if (!(discrepancy <= check.tolerance)) check.passed = false;
}

}  // namespace

std::vector<OracleCheck> run_oracle(std::size_t n, std::uint64_t seed, std::size_t instances) {
  if (n < 2 || n > kEstimandEnumerationCap) {
    throw ValidationError("oracle n must lie in [2, " + std::to_string(kEstimandEnumerationCap) + "]");
  }
  if (instances == 0) throw ValidationError("oracle needs at least one instance");

  OracleCheck decomposition{"total = direct + indirect (enumeration)", 0, 0.0, 1e-10, true};
  OracleCheck mc{"Monte Carlo vs enumeration (combined SEs)", 0, 0.0, 4.0, true};
  OracleCheck sensitivity{"total effect vs probability sensitivities", 0, 0.0, 1e-5, true};
  OracleCheck exposure{"exposure probability vs enumeration", 0, 0.0, 1e-12, true};
  OracleCheck ht{"HT exposure mean unbiased (enumeration)", 0, 0.0, 1e-10, true};
  OracleCheck series{"GMRF Neumann series vs solve (d_max=60, delta=0.5)", 0, 0.0, 1e-8, true};
  OracleCheck search{"exhaustive welfare >= every assignment and greedy", 0, 0.0, 1e-12, true};

  const std::vector<TreatmentAssignment> all = enumerate_assignments(n);
  for (std::size_t inst = 0; inst < instances; ++inst) {
    Rng rng(derive_seed(seed, inst));
    const InterferenceGraph graph = random_connected_graph(n, rng);
    const std::vector<double> p = random_probabilities(n, rng);
    const Design design = Design::bernoulli(p);

    GmrfParams gp;
    gp.beta = 4.0 * rng.uniform() - 2.0;
    gp.gamma = 4.0 * rng.uniform() - 2.0;
    gp.delta = 1.6 * rng.uniform() - 0.8;
    GmrfMeanModel gmrf(gp, graph);
    SaturatingModel saturating(graph, gp.beta, 1.0 + rng.uniform());
    const OutcomeMeanModel& model = inst % 2 == 0 ? static_cast<const OutcomeMeanModel&>(gmrf)
                                                  : static_cast<const OutcomeMeanModel&>(saturating);

    const EffectTriple en = effects_enumeration(model, design);
    {
      // Independent accumulation of the total.
      double total = 0.0;
      for (const TreatmentAssignment& x : all) {
        const FlipEffects fe = model.flip_effects(x);
        total += assignment_probability(design, x) * (fe.own.sum() + fe.others.sum());
      }
      total /= static_cast<double>(n);
      const double exact_gap = en.total.value - (en.direct.value + en.indirect.value);
      record(decomposition, std::max(std::abs(exact_gap), std::abs(total - en.total.value)));
    }
    {
      Rng mc_rng(derive_seed(seed ^ 0x9e3779b97f4a7c15ULL, inst));
      const EffectTriple est = effects_monte_carlo(model, design, 4000, mc_rng);
      auto z = [](const EffectEstimate& m, const EffectEstimate& e) {
        const double diff = std::abs(m.value - e.value);
        const double se = m.mc_se.value_or(0.0);
        // Affine models have zero Monte Carlo variance; then only rounding remains.
        if (se < 1e-12) return diff <= 1e-9 * (1.0 + std::abs(e.value)) ? 0.0 : HUGE_VAL;
        return diff / se;
      };
      record(mc, std::max({z(est.direct, en.direct), z(est.indirect, en.indirect), z(est.total, en.total)}));
    }
    record(sensitivity, sensitivity_check(model, p).gap);

    const ExposureMapping mapping = ExposureMapping::fraction_binned({0.0, 0.5, 1.0});
    const std::vector<ExposureLevel> levels{{0, 0, 0}, {0, 1, 0}, {1, 0, 0}, {1, 1, 0}};
    // Random fixed potential outcomes y_i(d).
    std::vector<std::vector<double>> table(n, std::vector<double>(levels.size()));
    for (auto& row : table) {
      for (double& v : row) v = 10.0 * rng.uniform() - 5.0;
    }
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const ExposureLevel& d = levels[l];
      const std::vector<double> exact = exposure_probabilities(mapping, graph, design, d);
      std::vector<double> summed(n, 0.0);
      double ht_mean = 0.0;
      for (const TreatmentAssignment& x : all) {
        const double px = assignment_probability(design, x);
        const std::vector<ExposureLevel> f = exposure_values(mapping, graph, x);
        Eigen::VectorXd y(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
          const auto pos = static_cast<std::size_t>(std::find(levels.begin(), levels.end(), f[i]) - levels.begin());
          y[static_cast<Eigen::Index>(i)] = table[i][pos];
          if (f[i] == d) summed[i] += px;
        }
        ht_mean += px * ht_exposure_mean(y, f, exact, d);
      }
      double gap = 0.0;
      double truth = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        gap = std::max(gap, std::abs(summed[i] - exact[i]));
        truth += table[i][l];
      }
      record(exposure, gap);
      record(ht, std::abs(ht_mean - truth / static_cast<double>(n)));
    }

    {
      GmrfParams sp = gp;
      sp.delta = 0.5;
      const TreatmentAssignment& x = all[static_cast<std::size_t>(rng.below(all.size()))];
      const Eigen::VectorXd exact = gmrf_mean(sp, graph, x);
      const Eigen::VectorXd approx = gmrf_mean_series(sp, graph, x, 60);
      record(series, (exact - approx).cwiseAbs().maxCoeff());
    }
    {
      const OptimizedAssignment best = optimize_assignment(model, SearchMethod::kExhaustive);
      const OptimizedAssignment greedy = optimize_assignment(model, SearchMethod::kGreedy);
      double excess = std::max(0.0, greedy.welfare - best.welfare);
      for (const TreatmentAssignment& x : all) {
        excess = std::max(excess, model.mean(x).mean() - best.welfare);
      }
      record(search, excess);
    }
  }
  return {decomposition, mc, sensitivity, exposure, ht, series, search};
}

void print_oracle_table(std::ostream& out, const std::vector<OracleCheck>& checks) {
  std::size_t width = 5;
  for (const OracleCheck& c : checks) width = std::max(width, c.name.size());
  out << std::left << std::setw(static_cast<int>(width)) << "check" << "  instances  worst         tolerance  result\n";
  for (const OracleCheck& c : checks) {
    out << std::left << std::setw(static_cast<int>(width)) << c.name << "  " << std::setw(9) << c.instances
        << "  " << std::setw(12) << std::setprecision(4) << std::scientific << c.worst << "  "
        << std::setw(9) << c.tolerance << "  " << (c.passed ? "PASS" : "FAIL") << '\n';
    out << std::defaultfloat;
  }
}

}  // namespace spillover
