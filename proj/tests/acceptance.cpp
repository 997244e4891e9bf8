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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spillover/designs.hpp"
#include "spillover/estimands.hpp"
#include "spillover/estimators.hpp"
#include "spillover/gmrf_mle.hpp"
#include "spillover/graph.hpp"
#include "spillover/oracle.hpp"
#include "spillover/outcome_models.hpp"
#include "spillover/random.hpp"
#include "spillover/studies.hpp"

namespace fs = std::filesystem;
using namespace spillover;

namespace {

constexpr std::uint64_t kSeed = 7;
int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << criterion << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

double fraction_below(const std::vector<PvalueRow>& rows, double level) {
  std::size_t hits = 0;
  for (const PvalueRow& r : rows) hits += r.p_value < level;
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct MeanSe {
  double mean;
  double se;
};

MeanSe mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double e : v) ss += (e - m) * (e - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

InterferenceGraph random_graph(std::size_t n, double p, Rng& rng) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.bernoulli(p)) edges.emplace_back(i, j);
    }
  }
  return InterferenceGraph::from_edges(n, edges);
}

void criterion1(std::size_t threads) {
  const nlohmann::json r = reproduce_effects(200, kSeed, threads);
  const double indirect = r["summary"]["monte_carlo"]["indirect"]["mean"].get<double>();
  const double a = r["large_n"]["amplification"].get<double>();
  const bool ok = std::abs(indirect - 9.375) <= 0.1 * 9.375 && std::abs(a - 1.875) <= 0.02;
  report(1, ok,
         "Monte Carlo indirect effect " + fmt(indirect) + " (target 9.375 +/- 10%), amplification at N=1e5 " +
             fmt(a) + " (target 1.875 +/- 0.02)");
}

void criteria2and3(std::size_t threads) {
  const double fa = fraction_below(run_pvalue_study('a', 500, 200, kSeed, threads, 500), 0.05);
  const double fb = fraction_below(run_pvalue_study('b', 500, 200, kSeed, threads, 500), 0.05);
  const double fc = fraction_below(run_pvalue_study('c', 500, 200, kSeed, threads, 500), 0.05);
  report(2, fa >= 0.70, "scenario a fraction of p < 0.05 = " + fmt(fa) + " (need >= 0.70)");
  report(3, fc <= 0.15 && fb > fc && fb < fa,
         "scenario c fraction " + fmt(fc) + " (need <= 0.15), scenario b fraction " + fmt(fb) +
             " strictly between c and a (" + fmt(fa) + ")");
}

void criterion4(std::size_t threads) {
  SimulationConfig c = pvalue_study_config('a', 500, 500, kSeed + 4, 500);
  c.scenario = "null";
  c.outcome.gmrf.gamma = 0.0;
  c.outcome.gmrf.delta = 0.0;
  const std::vector<PvalueRow> rows = run_test_study(c, threads);
  bool ok = true;
  std::string detail = "500 null runs:";
  for (double level : {0.01, 0.05, 0.1, 0.2}) {
    std::size_t hits = 0;
    for (const PvalueRow& r : rows) hits += r.p_value <= level;
    const double rate = static_cast<double>(hits) / static_cast<double>(rows.size());
    const double bound = level + 4.0 * std::sqrt(level * (1.0 - level) / static_cast<double>(rows.size()));
    ok = ok && rate <= bound;
    detail += " P(p<=" + fmt(level) + ")=" + fmt(rate) + " (<= " + fmt(bound) + ")";
  }
  report(4, ok, detail);
}

void criterion5(std::size_t threads) {
  const std::vector<TwoWorldsRow> rows = run_two_worlds(two_worlds_config(1000, 1000, kSeed), threads);
  std::vector<double> with, without;
  for (const TwoWorldsRow& r : rows) (r.has_treated_superstar ? with : without).push_back(r.avg_outcome);
  if (with.empty() || without.empty()) {
    report(5, false, "one group is empty");
    return;
  }
  const double mw = quantile(with, 0.5);
  const double mo = quantile(without, 0.5);
  const double iqr = quantile(without, 0.75) - quantile(without, 0.25);
  const double mean = mean_se(without).mean;
  const double shape = std::abs(mean - mo) / iqr;
  report(5, mw > mo && shape <= 0.05,
         "median with treated superstar " + fmt(mw) + " vs without " + fmt(mo) + " (" +
             std::to_string(with.size()) + "/" + std::to_string(without.size()) +
             " replicates), without-group |mean - median| / IQR = " + fmt(shape) + " (need <= 0.05)");
}

void criterion6() {
  // Decomposition, Monte Carlo and sensitivity checks of the self-check suite.
  const std::vector<OracleCheck> checks = run_oracle(10, kSeed, 20);
  bool ok = true;
  std::string detail;
  for (const OracleCheck& c : checks) {
    const bool wanted = c.name.find("direct + indirect") != std::string::npos ||
                        c.name.find("Monte Carlo") != std::string::npos ||
                        c.name.find("sensitivities") != std::string::npos;
    if (!wanted) continue;
    ok = ok && c.passed;
    detail += (detail.empty() ? "" : "; ") + c.name + " worst " + fmt(c.worst) + " (tol " + fmt(c.tolerance) + ")";
  }
  // Exact additivity under enumeration, bit for bit.
  Rng rng(kSeed);
  bool exact = true;
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t n = 2 + rng.below(9);
    GmrfParams p;
    p.beta = rng.normal();
    p.gamma = rng.normal();
    p.delta = 1.8 * rng.uniform() - 0.9;
    const GmrfMeanModel m(p, random_graph(n, 0.5, rng));
    std::vector<double> probs(n);
    for (double& v : probs) v = 0.2 + 0.6 * rng.uniform();
    const EffectTriple t = effects_enumeration(m, Design::bernoulli(probs));
    exact = exact && t.total.value == t.direct.value + t.indirect.value;
  }
  report(6, ok && exact, detail + "; exact additivity " + (exact ? "holds" : "violated"));
}

void criterion7() {
  Rng rng(kSeed);
  GmrfParams p;
  p.beta = 1.5;
  p.gamma = 0.8;
  p.delta = 0.5;
  double series_gap = 0.0;
  for (int inst = 0; inst < 10; ++inst) {
    const std::size_t n = 3 + rng.below(20);
    const InterferenceGraph g = random_graph(n, 0.4, rng);
    const TreatmentAssignment x = sample_assignment(Design::bernoulli(n, 0.5), n, rng);
    const Eigen::VectorXd exact = gmrf_mean(p, g, x);
    series_gap = std::max(series_gap, (gmrf_mean_series(p, g, x, 60) - exact).cwiseAbs().maxCoeff());
  }

  const std::size_t n = 6;
  InterferenceGraph g = random_graph(n, 0.5, rng);
  const GmrfSystem sys(p, g);
  const TreatmentAssignment x({1, 0, 1, 1, 0, 0});
  const Eigen::VectorXd mu = sys.mean(x);
  const Eigen::MatrixXd cov = sys.precision().inverse();
  const int draws = 100000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(n, n);
  for (int d = 0; d < draws; ++d) {
    const Eigen::VectorXd y = sys.sample(x, rng) - mu;
    sum += y;
    cross += y * y.transpose();
  }
  double worst_z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    worst_z = std::max(worst_z, std::abs(sum[ii] / draws) / std::sqrt(cov(ii, ii) / draws));
    for (std::size_t j = 0; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double se = std::sqrt((cov(ii, ii) * cov(jj, jj) + cov(ii, jj) * cov(ii, jj)) / draws);
      worst_z = std::max(worst_z, std::abs(cross(ii, jj) / draws - cov(ii, jj)) / se);
    }
  }

  GmrfParams dyad_p;
  dyad_p.beta = 2;
  dyad_p.gamma = 1;
  dyad_p.delta = 0.5;
  const InterferenceGraph dyad = InterferenceGraph::from_edges(2, std::vector<Edge>{{0, 1}});
  const GmrfSystem d(dyad_p, dyad);
  const Eigen::VectorXd dm = d.mean(TreatmentAssignment({1, 0}));
  const Eigen::MatrixXd dc = d.precision().inverse();
  const double dyad_gap = std::max({std::abs(dm[0] - 10.0 / 3), std::abs(dm[1] - 8.0 / 3), std::abs(dc(0, 0) - 4.0 / 3),
                                    std::abs(dc(0, 1) - 2.0 / 3), std::abs(dc(1, 1) - 4.0 / 3)});
  report(7, series_gap <= 1e-8 && worst_z <= 4.0 && dyad_gap <= 1e-12,
         "series vs solve " + fmt(series_gap) + " (<= 1e-8), sampler worst |z| " + fmt(worst_z) +
             " over 1e5 draws (<= 4), dyad hand values within " + fmt(dyad_gap));
}

double logistic_fn(double t) { return 1.0 / (1.0 + std::exp(-t)); }

void criterion8() {
  const std::vector<OracleCheck> checks = run_oracle(10, kSeed + 8, 20);
  bool ht_ok = false;
  double ht_worst = 0.0;
  for (const OracleCheck& c : checks) {
    if (c.name.find("HT") != std::string::npos) {
      ht_ok = c.passed && c.tolerance <= 1e-10;
      ht_worst = c.worst;
    }
  }

  // Doubly robust branches: correct propensity with a wrong regression, and
  // a correct regression with a wrong propensity.
  Rng rng(kSeed + 8);
  const std::size_t n = 400;
  Eigen::MatrixXd c(n, 1);
  for (std::size_t i = 0; i < n; ++i) c(i, 0) = rng.normal();
  double target = 0.0;
  for (std::size_t i = 0; i < n; ++i) target += (1.0 + 2.0 * c(i, 0)) / static_cast<double>(n);
  const PropensityFn true_psi = [](const ExposureLevel& d, const Eigen::VectorXd& ci) {
    return d.treated ? logistic_fn(0.4 + ci[0]) : 1.0 - logistic_fn(0.4 + ci[0]);
  };
  const PropensityFn flat_psi = [](const ExposureLevel&, const Eigen::VectorXd&) { return 0.5; };
  const RegressionFn zero_m = [](const ExposureLevel&, const Eigen::VectorXd&) { return 0.0; };
  std::vector<double> a_bias, b_bias;
  for (int r = 0; r < 500; ++r) {
    std::vector<ExposureLevel> f(n);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
      const bool t = rng.bernoulli(logistic_fn(0.4 + c(i, 0)));
      f[i] = {t ? 1 : 0, 0, 0};
      y[i] = (t ? 1.0 + 2.0 * c(i, 0) : -1.0 + 0.5 * c(i, 0)) + rng.normal();
    }
    const RegressionFn fitted = fit_outcome_regression(y, f, c).as_function();
    a_bias.push_back(dr_exposure_mean(y, f, c, {1, 0, 0}, true_psi, zero_m) - target);
    b_bias.push_back(dr_exposure_mean(y, f, c, {1, 0, 0}, flat_psi, fitted) - target);
  }
  const MeanSe a = mean_se(a_bias);
  const MeanSe b = mean_se(b_bias);
  const bool dr_ok = std::abs(a.mean) <= 4.0 * a.se && std::abs(b.mean) <= 4.0 * b.se;

  // Profile maximum likelihood on the rank-1 Beta(1, 3) graph at N = 500.
  GmrfParams truth;
  truth.beta = 2.0;
  truth.gamma = 2.0;
  truth.delta = 0.5;
  std::array<double, 3> mean{0, 0, 0};
  for (int r = 0; r < 50; ++r) {
    Rng w(derive_seed(kSeed + 8, static_cast<std::uint64_t>(r)));
    const Eigen::MatrixXd alpha = sample_latent_beta(500, 1.0, 3.0, w);
    const InterferenceGraph g = sample_rdpg(RdpgParams(alpha, 1.0), w);
    const TreatmentAssignment x = sample_assignment(Design::bernoulli(500, 0.5), 500, w);
    const MleFit fit = gmrf_mle(g, x, gmrf_sample(truth, g, x, w));
    mean[0] += fit.beta_hat / 50;
    mean[1] += fit.gamma_hat / 50;
    mean[2] += fit.delta_hat / 50;
  }
  const bool mle_ok = std::abs(mean[0] - 2.0) <= 0.2 && std::abs(mean[1] - 2.0) <= 0.2 && std::abs(mean[2] - 0.5) <= 0.1;
  report(8, ht_ok && dr_ok && mle_ok,
         "HT enumeration gap " + fmt(ht_worst) + " (<= 1e-10); DR bias " + fmt(a.mean) + " (se " + fmt(a.se) +
             ") and " + fmt(b.mean) + " (se " + fmt(b.se) + "); MLE means beta " + fmt(mean[0]) + " gamma " +
             fmt(mean[1]) + " delta " + fmt(mean[2]));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// stdout plus every file the run wrote.
std::string run_cli(const std::string& args, const fs::path& dir, const std::string& tag) {
  const fs::path out = dir / (tag + ".out");
  const fs::path stdout_path = dir / (tag + ".stdout");
  const std::string cmd = std::string(SPILLOVER_LAB_BIN) + " " + args + " --out " + out.string() + " >" +
                          stdout_path.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return "exit failure";
  return slurp(stdout_path) + "\n--\n" + slurp(out) + "\n--\n" + slurp(fs::path(out.string() + ".hist.csv"));
}

void criterion9() {
  const fs::path dir = fs::temp_directory_path() / "spillover_acceptance";
  fs::create_directories(dir);
  const std::vector<std::string> figures{
      "--figure pvals-500 --replications 6 --resamples 99",
      "--figure pvals-1000 --replications 3 --resamples 99",
      "--figure two-worlds --replications 12 --emit-hist bins=20",
      "--figure effects --replications 6",
  };
  bool ok = true;
  std::string detail;
  for (std::size_t f = 0; f < figures.size(); ++f) {
    const std::string base = "reproduce --seed 19 " + figures[f];
    const std::string a = run_cli(base + " --threads 1", dir, "a");
    const std::string b = run_cli(base + " --threads 1", dir, "b");
    const std::string c = run_cli(base + " --threads 8", dir, "c");
    const bool same = a != "exit failure" && a == b && a == c;
    ok = ok && same;
    detail += (detail.empty() ? "" : ", ") + figures[f].substr(9, figures[f].find(' ', 9) - 9) +
              (same ? " identical" : " differs");
  }
  fs::remove_all(dir);
  report(9, ok, detail + " (repeat and --threads 1 vs 8)");
}

}  // namespace

int main() {
  const std::size_t threads = resolve_threads(std::nullopt);
  try {
    criterion1(threads);
    criteria2and3(threads);
    criterion4(threads);
    criterion5(threads);
    criterion6();
    criterion7();
    criterion8();
    criterion9();
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance run aborted: " << e.what() << std::endl;
    return 1;
  }
  return failures == 0 ? 0 : 1;
}
