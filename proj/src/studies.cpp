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

#include "spillover/studies.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "spillover/errors.hpp"
#include "spillover/estimands.hpp"
#include "spillover/estimators.hpp"
#include "spillover/exposure.hpp"
#include "spillover/interference_tests.hpp"
#include "spillover/random.hpp"

namespace spillover {

using nlohmann::json;

std::size_t resolve_threads(std::optional<std::size_t> requested) {
  if (requested) {
    if (*requested == 0) throw ValidationError("--threads must be at least 1");
    return *requested;
  }
  if (const char* env = std::getenv("SPILLOVER_LAB_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || v == 0) {
      throw ValidationError("SPILLOVER_LAB_THREADS must be a positive integer");
    }
    return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t replicate_seed(std::uint64_t master, std::size_t replicate) {
  return derive_seed(master, replicate);
}

namespace {

// Sub-streams of a replicate seed.
constexpr std::uint64_t kWorldStream = 0;
constexpr std::uint64_t kPlanStream = 1;
constexpr std::uint64_t kFocalStream = 2;
constexpr std::uint64_t kEffectsStream = 3;

struct GraphDraw {
  InterferenceGraph graph{1};
  std::optional<Eigen::MatrixXd> positions;
  std::vector<std::uint8_t> superstar;
};

GraphDraw draw_graph(const SimulationConfig& c, Rng& rng) {
  GraphDraw out;
  const std::size_t n = c.n;
  out.superstar.assign(n, 0);
  switch (c.graph.kind) {
    case GraphSpec::Kind::kRdpg: {
      Eigen::MatrixXd pos = c.graph.positions ? *c.graph.positions
                                              : sample_latent_beta(n, c.graph.latent_a, c.graph.latent_b, rng);
      const RdpgParams params(pos, c.graph.sparsity);
      out.graph = sample_rdpg(params, rng);
      out.positions = std::move(pos);
      break;
    }
    case GraphSpec::Kind::kBetaModel: {
      Eigen::VectorXd w(static_cast<Eigen::Index>(n));
      if (c.graph.weights) {
        for (std::size_t i = 0; i < n; ++i) w[static_cast<Eigen::Index>(i)] = (*c.graph.weights)[i];
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          out.superstar[i] = rng.bernoulli(c.graph.superstar_probability) ? 1 : 0;
          w[static_cast<Eigen::Index>(i)] = out.superstar[i] ? c.graph.weight_high : c.graph.weight_low;
        }
      }
      out.graph = sample_beta_model(BetaModelParams(w), rng);
      break;
    }
    case GraphSpec::Kind::kEdgeList: {
      out.graph = read_edge_list(c.graph.path);
      if (out.graph.size() != n) throw ConfigError("graph.path", "edge list size does not match n");
      break;
    }
  }
  return out;
}

}  // namespace

InterferenceGraph generate_graph(const SimulationConfig& config, std::uint64_t seed) {
  Rng rng(derive_seed(seed, kWorldStream));
  return draw_graph(config, rng).graph;
}

World generate_world(const SimulationConfig& c, std::uint64_t seed) {
  Rng rng(derive_seed(seed, kWorldStream));
  GraphDraw g = draw_graph(c, rng);
  World w;
  w.graph = std::move(g.graph);
  w.positions = std::move(g.positions);
  w.superstar = std::move(g.superstar);
  w.design = c.design.build(c.n);
  w.x = sample_assignment(*w.design, c.n, rng);
  if (c.outcome.kind == OutcomeSpec::Kind::kGmrf) {
    w.gmrf = c.outcome.gmrf;
    if (c.outcome.superstar_boost) w.gmrf.boost = Boost{*c.outcome.superstar_boost, w.superstar};
    auto system = std::make_shared<GmrfSystem>(w.gmrf, w.graph);
    w.y = system->sample(w.x, rng);
    w.system = std::move(system);
  } else {
    w.y = fixed_linear_outcome(c.outcome.linear, w.graph, w.x);
  }
  return w;
}

SimulationConfig pvalue_study_config(char scenario, std::size_t n, std::size_t replications,
                                     std::uint64_t seed, std::size_t resamples) {
  SimulationConfig c;
  c.seed = seed;
  c.scenario = std::string(1, scenario);
  c.n = n;
  c.replications = replications;
  c.graph.kind = GraphSpec::Kind::kRdpg;
  c.graph.latent_a = 1.0;
  c.graph.latent_b = 3.0;
  c.graph.sparsity = 1.0;
  c.design.kind = DesignSpec::Kind::kBernoulli;
  c.design.probability = 0.4;
  GmrfParams& p = c.outcome.gmrf;
  switch (scenario) {
    case 'a': p.beta = 5.0; p.gamma = 5.0; p.delta = 0.0; break;
    case 'b': p.beta = 5.0; p.gamma = 5.0; p.delta = 0.75; break;
    case 'c': p.beta = 5.0; p.gamma = 0.0; p.delta = 0.75; break;
    default: throw ValidationError("scenario must be a, b, or c");
  }
  p.sigma2 = 1.0;
  p.treatment_scaling = Scaling::degree();
  p.outcome_scaling = Scaling::spectral();
  c.test = TestSpec{0.3, TestStatistic::kTU, resamples, Sidedness::kGreater};
  return c;
}

std::vector<PvalueRow> run_test_study(const SimulationConfig& c, std::size_t threads) {
  if (!c.test) throw ConfigError("test", "is required for a test study");
  if (c.design.kind != DesignSpec::Kind::kBernoulli) {
    throw ConfigError("design.type", "conditional resampling requires a Bernoulli design");
  }
  std::vector<PvalueRow> rows(c.replications);
  parallel_for(c.replications, threads, [&](std::size_t r) {
    const std::uint64_t seed = replicate_seed(c.seed, r);
    const World w = generate_world(c, seed);
    Rng focal_rng(derive_seed(seed, kFocalStream));
    TestPlan plan;
    plan.focal = select_focal_random(c.n, c.test->focal_fraction, focal_rng);
    plan.statistic = c.test->statistic;
    plan.resamples = c.test->resamples;
    plan.sidedness = c.test->sidedness;
    plan.design = *w.design;
    plan.seed = derive_seed(seed, kPlanStream);
    const TestReport report = crt_pvalue(w.x, w.y, w.graph, plan);
    rows[r] = {c.scenario, c.n, r, seed, report.observed, report.p_value};
  });
  return rows;
}

std::vector<PvalueRow> run_pvalue_study(char scenario, std::size_t n, std::size_t replications,
                                        std::uint64_t seed, std::size_t threads,
                                        std::size_t resamples) {
  return run_test_study(pvalue_study_config(scenario, n, replications, seed, resamples), threads);
}

SimulationConfig two_worlds_config(std::size_t replications, std::size_t n, std::uint64_t seed,
                                   double epsilon) {
  SimulationConfig c;
  c.seed = seed;
  c.scenario = "two-worlds";
  c.n = n;
  c.replications = replications;
  c.graph.kind = GraphSpec::Kind::kBetaModel;
  c.graph.superstar_probability = 1.0 / 1000.0;
  c.graph.weight_low = -2.0;
  c.graph.weight_high = 20.0;
  c.design.kind = DesignSpec::Kind::kBernoulli;
  c.design.probability = 0.5;
  GmrfParams& p = c.outcome.gmrf;
  p.beta = 2.0;
  p.gamma = 2.0;
  p.delta = 0.9;
  p.sigma2 = 1.0;
  p.with_scaling(Scaling::degree());
  c.outcome.superstar_boost = epsilon;
  return c;
}

std::vector<TwoWorldsRow> run_two_worlds(const SimulationConfig& c, std::size_t threads) {
  if (c.outcome.kind != OutcomeSpec::Kind::kGmrf) {
    throw ConfigError("outcome.model", "the two-worlds study needs a GMRF outcome");
  }
  std::vector<TwoWorldsRow> rows(c.replications);
  parallel_for(c.replications, threads, [&](std::size_t r) {
    const std::uint64_t seed = replicate_seed(c.seed, r);
    const World w = generate_world(c, seed);
    std::size_t stars = 0;
    bool treated_star = false;
    for (std::size_t i = 0; i < c.n; ++i) {
      if (!w.superstar[i]) continue;
      ++stars;
      if (w.x.treated(i)) treated_star = true;
    }
    rows[r] = {r, seed, w.y.mean(), stars, treated_star};
  });
  return rows;
}

namespace {

json estimate_json(const EffectEstimate& e) {
  json j{{"value", e.value}, {"method", to_string(e.method)}};
  if (e.mc_se) j["se"] = *e.mc_se;
  return j;
}

json triple_json(const EffectTriple& t) {
  return {{"direct", estimate_json(t.direct)},
          {"indirect", estimate_json(t.indirect)},
          {"total", estimate_json(t.total)}};
}

std::unique_ptr<OutcomeMeanModel> mean_model(const SimulationConfig& c, const World& w) {
  if (c.outcome.kind == OutcomeSpec::Kind::kGmrf) return std::make_unique<GmrfMeanModel>(w.system);
  return std::make_unique<FixedLinearMeanModel>(c.outcome.linear, w.graph);
}

struct RunningMean {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++count;
  }
  json to_json() const {
    if (count == 0) return nullptr;
    const double n = static_cast<double>(count);
    const double mean = sum / n;
    const double var = count > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
    return {{"mean", mean}, {"se", std::sqrt(var / n)}, {"replicates", count}};
  }
};

}  // namespace

nlohmann::json run_effects_study(const SimulationConfig& c, std::size_t threads) {
  std::vector<json> reps(c.replications);
  parallel_for(c.replications, threads, [&](std::size_t r) {
    const std::uint64_t seed = replicate_seed(c.seed, r);
    const World w = generate_world(c, seed);
    const std::unique_ptr<OutcomeMeanModel> model = mean_model(c, w);
    Rng rng(derive_seed(seed, kEffectsStream));
    const EffectTriple mc = effects_monte_carlo(*model, *w.design, c.effect_draws, rng);
    json rec{{"replicate", r}, {"seed", seed}, {"monte_carlo", triple_json(mc)}};
    rec["enumeration"] = nullptr;
    rec["closed_form"] = nullptr;
    if (c.n <= kEstimandEnumerationCap && w.design->is_bernoulli()) {
      const EffectTriple en = effects_enumeration(*model, *w.design);
      rec["enumeration"] = triple_json(en);
      auto z = [](const EffectEstimate& m, const EffectEstimate& e) {
        // Affine models give the same flip effects for every draw, so the
        // standard error is rounding noise; compare those values directly.
        const double diff = std::abs(m.value - e.value);
        if (diff <= 1e-9 * std::max(1.0, std::abs(e.value))) return 0.0;
        const double se = m.mc_se.value_or(0.0);
        return se > 0.0 ? diff / se : HUGE_VAL;
      };
      rec["gaps"] = {{"mc_vs_enumeration_se", std::max({z(mc.direct, en.direct), z(mc.indirect, en.indirect),
                                                        z(mc.total, en.total)})},
                     {"decomposition", en.total.value - en.direct.value - en.indirect.value}};
      const SensitivityCheck s = sensitivity_check(*model, w.design->as_bernoulli().probabilities);
      rec["sensitivity"] = {{"total_effect", s.total_effect}, {"derivative_sum", s.derivative_sum},
                            {"gap", s.gap}};
    }
    if (c.outcome.kind == OutcomeSpec::Kind::kGmrf && w.positions) {
      const GmrfParams& p = c.outcome.gmrf;
      rec["closed_form"] = triple_json(closed_form_effects(p.beta, p.gamma, p.delta, *w.positions));
    }
    reps[r] = std::move(rec);
  });

  RunningMean md, mi, mt, cd, ci, ct;
  for (const json& rec : reps) {
    md.add(rec["monte_carlo"]["direct"]["value"].get<double>());
    mi.add(rec["monte_carlo"]["indirect"]["value"].get<double>());
    mt.add(rec["monte_carlo"]["total"]["value"].get<double>());
    if (!rec["closed_form"].is_null()) {
      cd.add(rec["closed_form"]["direct"]["value"].get<double>());
      ci.add(rec["closed_form"]["indirect"]["value"].get<double>());
      ct.add(rec["closed_form"]["total"]["value"].get<double>());
    }
  }
  json out;
  out["config"] = to_json(c);
  out["summary"] = {{"monte_carlo", {{"direct", md.to_json()}, {"indirect", mi.to_json()}, {"total", mt.to_json()}}},
                    {"closed_form", {{"direct", cd.to_json()}, {"indirect", ci.to_json()}, {"total", ct.to_json()}}}};
  out["replicates"] = reps;
  return out;
}

SimulationConfig effects_study_config(std::size_t replications, std::size_t n, std::uint64_t seed) {
  SimulationConfig c = pvalue_study_config('c', n, replications, seed);
  c.scenario = "effects";
  c.test.reset();
  c.effect_draws = 20;
  return c;
}

nlohmann::json reproduce_effects(std::size_t replications, std::uint64_t seed, std::size_t threads,
                                 std::size_t n, std::size_t large_n) {
  const SimulationConfig c = effects_study_config(replications, n, seed);
  json out = run_effects_study(c, threads);
  Rng rng(derive_seed(seed, large_n));
  const Eigen::MatrixXd alpha = sample_latent_beta(large_n, 1.0, 3.0, rng);
  const double a = amplification_factor(alpha, c.outcome.gmrf.delta);
  const double d = c.outcome.gmrf.delta;
  out["large_n"] = {{"n", large_n},
                    {"amplification", a},
                    {"amplification_limit", 5.0 * d / (8.0 * (1.0 - d))},
                    {"indirect", c.outcome.gmrf.beta * a}};
  return out;
}

nlohmann::json estimate_data(const InterferenceGraph& graph, const TreatmentAssignment& x,
                             const Eigen::VectorXd& y, const Design& design,
                             const GmrfParams& assumed) {
  json out;
  out["n"] = graph.size();
  out["treated"] = x.treated_count();
  out["mean_outcome"] = y.mean();
  if (design.is_bernoulli()) {
    const std::vector<double>& p = design.as_bernoulli().probabilities;
    out["ht_direct"] = ht_direct(y, x, p);
    const ExposureMapping own = ExposureMapping::own_treatment();
    const std::vector<ExposureLevel> f = exposure_values(own, graph, x);
    const ExposureLevel d1{1, 0, 0};
    const ExposureLevel d0{0, 0, 0};
    const std::vector<double> p1 = exposure_probabilities(own, graph, design, d1);
    const std::vector<double> p0 = exposure_probabilities(own, graph, design, d0);
    try {
      out["hajek_direct"] = exposure_contrast(hajek_exposure_mean(y, f, p1, d1), hajek_exposure_mean(y, f, p0, d0));
    } catch (const ValidationError& e) {
      out["hajek_direct"] = nullptr;
      out["hajek_error"] = e.what();
    }
  }
  MleOptions opt;
  opt.treatment_scaling = assumed.treatment_scaling;
  opt.outcome_scaling = assumed.outcome_scaling;
  opt.boost = assumed.boost;
  try {
    const MleFit fit = gmrf_mle(graph, x, y, opt);
    out["gmrf_mle"] = {{"beta", fit.beta_hat}, {"gamma", fit.gamma_hat}, {"delta", fit.delta_hat},
                       {"sigma2", fit.sigma2_hat}, {"loglik", fit.loglik},
                       {"delta_at_boundary", fit.delta_at_boundary}};
  } catch (const std::exception& e) {
    out["gmrf_mle"] = nullptr;
    out["gmrf_mle_error"] = e.what();
  }
  return out;
}

nlohmann::json run_estimate_study(const SimulationConfig& c, std::size_t threads) {
  std::vector<json> reps(c.replications);
  parallel_for(c.replications, threads, [&](std::size_t r) {
    const std::uint64_t seed = replicate_seed(c.seed, r);
    const World w = generate_world(c, seed);
    const GmrfParams assumed = c.outcome.kind == OutcomeSpec::Kind::kGmrf ? w.gmrf : GmrfParams{};
    json rec = estimate_data(w.graph, w.x, w.y, *w.design, assumed);
    rec["replicate"] = r;
    rec["seed"] = seed;
    reps[r] = std::move(rec);
  });
  return {{"config", to_json(c)}, {"replicates", reps}};
}

std::vector<HistogramBin> histogram(const std::string& group, const std::vector<double>& values,
                                    std::size_t bins, double lower, double upper) {
  if (bins == 0) throw ValidationError("histogram needs at least one bin");
  if (!(upper > lower)) {
    // Degenerate range: widen symmetrically so every value lands in a bin.
    lower -= 0.5;
    upper += 0.5;
  }
  const double width = (upper - lower) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b] = {group, b, lower + static_cast<double>(b) * width,
              b + 1 == bins ? upper : lower + static_cast<double>(b + 1) * width, 0};
  }
  for (double v : values) {
    if (v < lower || v > upper) continue;
    auto b = static_cast<std::size_t>((v - lower) / width);
    out[std::min(b, bins - 1)].count++;
  }
  return out;
}

}  // namespace spillover
