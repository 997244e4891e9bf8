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

#include "spillover/config.hpp"

#include <cmath>
#include <istream>
#include <iterator>
#include <set>

namespace spillover {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& field) {
  if (!j.is_object()) throw ConfigError(field, "must be an object");
}

void reject_unknown(const json& j, const std::string& field, std::set<std::string> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.contains(it.key())) {
      throw ConfigError(field.empty() ? it.key() : field + "." + it.key(), "unknown key");
    }
  }
}

std::string path_of(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
  return v;
}

std::uint64_t unsigned_integer(const json& j, const std::string& field) {
  if (!j.is_number_unsigned()) throw ConfigError(field, "must be a nonnegative integer");
  return j.get<std::uint64_t>();
}

std::string string_value(const json& j, const std::string& field) {
  if (!j.is_string()) throw ConfigError(field, "must be a string");
  return j.get<std::string>();
}

template <typename F>
void optional_field(const json& j, const std::string& parent, const std::string& key, F&& f) {
  if (j.contains(key)) f(j.at(key), path_of(parent, key));
}

std::vector<double> number_array(const json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError(field, "must be an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    out.push_back(number(j[k], field + "[" + std::to_string(k) + "]"));
  }
  return out;
}

GraphSpec parse_graph(const json& j, std::size_t n) {
  const std::string f = "graph";
  require_object(j, f);
  if (!j.contains("model")) throw ConfigError("graph.model", "is required");
  const std::string model = string_value(j.at("model"), "graph.model");
  GraphSpec g;
  if (model == "rdpg") {
    reject_unknown(j, f, {"model", "positions", "latent", "sparsity"});
    g.kind = GraphSpec::Kind::kRdpg;
    if (j.contains("positions") && j.contains("latent")) {
      throw ConfigError("graph.positions", "conflicts with graph.latent");
    }
    optional_field(j, f, "positions", [&](const json& p, const std::string& pf) {
      if (!p.is_array() || p.size() != n) throw ConfigError(pf, "must be an array of n rows");
      std::size_t rank = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> row = number_array(p[i], pf + "[" + std::to_string(i) + "]");
        if (i == 0) rank = row.size();
        if (row.empty() || row.size() != rank) throw ConfigError(pf, "rows must share a positive length");
        if (i == 0) g.positions.emplace(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rank));
        for (std::size_t c = 0; c < rank; ++c) {
          (*g.positions)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
        }
      }
    });
    optional_field(j, f, "latent", [&](const json& l, const std::string& lf) {
      require_object(l, lf);
      reject_unknown(l, lf, {"a", "b"});
      optional_field(l, lf, "a", [&](const json& v, const std::string& vf) { g.latent_a = number(v, vf); });
      optional_field(l, lf, "b", [&](const json& v, const std::string& vf) { g.latent_b = number(v, vf); });
      if (!(g.latent_a > 0.0)) throw ConfigError(lf + ".a", "must be positive");
      if (!(g.latent_b > 0.0)) throw ConfigError(lf + ".b", "must be positive");
    });
    optional_field(j, f, "sparsity", [&](const json& v, const std::string& vf) {
      g.sparsity = number(v, vf);
      if (!(g.sparsity >= 0.0 && g.sparsity <= 1.0)) throw ConfigError(vf, "must lie in [0, 1]");
    });
    if (g.positions) RdpgParams(*g.positions, g.sparsity);
  } else if (model == "beta_model") {
    reject_unknown(j, f, {"model", "weights", "superstar_probability", "weight_low", "weight_high"});
    g.kind = GraphSpec::Kind::kBetaModel;
    optional_field(j, f, "weights", [&](const json& v, const std::string& vf) {
      g.weights = number_array(v, vf);
      if (g.weights->size() != n) throw ConfigError(vf, "must have n entries");
    });
    optional_field(j, f, "superstar_probability", [&](const json& v, const std::string& vf) {
      if (g.weights) throw ConfigError(vf, "conflicts with graph.weights");
      g.superstar_probability = number(v, vf);
      if (!(g.superstar_probability >= 0.0 && g.superstar_probability <= 1.0)) {
        throw ConfigError(vf, "must lie in [0, 1]");
      }
    });
    optional_field(j, f, "weight_low", [&](const json& v, const std::string& vf) { g.weight_low = number(v, vf); });
    optional_field(j, f, "weight_high", [&](const json& v, const std::string& vf) { g.weight_high = number(v, vf); });
  } else if (model == "edge_list") {
    reject_unknown(j, f, {"model", "path"});
    g.kind = GraphSpec::Kind::kEdgeList;
    if (!j.contains("path")) throw ConfigError("graph.path", "is required for an edge list");
    g.path = string_value(j.at("path"), "graph.path");
  } else {
    throw ConfigError("graph.model", "must be one of rdpg, beta_model, edge_list");
  }
  return g;
}

DesignSpec parse_design(const json& j, std::size_t n) {
  const std::string f = "design";
  require_object(j, f);
  if (!j.contains("type")) throw ConfigError("design.type", "is required");
  const std::string type = string_value(j.at("type"), "design.type");
  DesignSpec d;
  auto interior = [](double p, const std::string& pf) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError(pf, "must lie strictly inside (0, 1)");
  };
  if (type == "bernoulli") {
    reject_unknown(j, f, {"type", "probability", "probabilities"});
    d.kind = DesignSpec::Kind::kBernoulli;
    if (j.contains("probability") && j.contains("probabilities")) {
      throw ConfigError("design.probabilities", "conflicts with design.probability");
    }
    optional_field(j, f, "probability", [&](const json& v, const std::string& vf) {
      d.probability = number(v, vf);
      interior(d.probability, vf);
    });
    optional_field(j, f, "probabilities", [&](const json& v, const std::string& vf) {
      d.probabilities = number_array(v, vf);
      if (d.probabilities->size() != n) throw ConfigError(vf, "must have n entries");
      for (std::size_t k = 0; k < n; ++k) interior((*d.probabilities)[k], vf + "[" + std::to_string(k) + "]");
    });
  } else if (type == "complete") {
    reject_unknown(j, f, {"type", "n_treated"});
    d.kind = DesignSpec::Kind::kComplete;
    if (!j.contains("n_treated")) throw ConfigError("design.n_treated", "is required");
    d.n_treated = unsigned_integer(j.at("n_treated"), "design.n_treated");
    if (d.n_treated > n) throw ConfigError("design.n_treated", "must not exceed n");
  } else if (type == "cluster") {
    reject_unknown(j, f, {"type", "labels", "probability"});
    d.kind = DesignSpec::Kind::kCluster;
    if (!j.contains("labels")) throw ConfigError("design.labels", "is required");
    const json& labels = j.at("labels");
    if (!labels.is_array() || labels.size() != n) throw ConfigError("design.labels", "must have n entries");
    for (std::size_t k = 0; k < n; ++k) {
      d.labels.push_back(unsigned_integer(labels[k], "design.labels[" + std::to_string(k) + "]"));
    }
    optional_field(j, f, "probability", [&](const json& v, const std::string& vf) {
      d.probability = number(v, vf);
      interior(d.probability, vf);
    });
  } else {
    throw ConfigError("design.type", "must be one of bernoulli, complete, cluster");
  }
  return d;
}

OutcomeSpec parse_outcome(const json& j, const GraphSpec& graph) {
  const std::string f = "outcome";
  require_object(j, f);
  if (!j.contains("model")) throw ConfigError("outcome.model", "is required");
  const std::string model = string_value(j.at("model"), "outcome.model");
  OutcomeSpec o;
  if (model == "gmrf") {
    reject_unknown(j, f, {"model", "beta", "gamma", "delta", "sigma2", "scaling", "superstar_boost"});
    o.kind = OutcomeSpec::Kind::kGmrf;
    GmrfParams& p = o.gmrf;
    optional_field(j, f, "beta", [&](const json& v, const std::string& vf) { p.beta = number(v, vf); });
    optional_field(j, f, "gamma", [&](const json& v, const std::string& vf) { p.gamma = number(v, vf); });
    optional_field(j, f, "delta", [&](const json& v, const std::string& vf) {
      p.delta = number(v, vf);
      if (!(std::abs(p.delta) < 1.0)) throw ConfigError(vf, "must satisfy |delta| < 1");
    });
    optional_field(j, f, "sigma2", [&](const json& v, const std::string& vf) {
      p.sigma2 = number(v, vf);
      if (!(p.sigma2 > 0.0)) throw ConfigError(vf, "must be positive");
    });
    optional_field(j, f, "scaling", [&](const json& v, const std::string& vf) {
      if (v.is_object()) {
        reject_unknown(v, vf, {"treatment", "outcome"});
        optional_field(v, vf, "treatment", [&](const json& s, const std::string& sf) {
          p.treatment_scaling = parse_scaling(s, sf);
        });
        optional_field(v, vf, "outcome", [&](const json& s, const std::string& sf) {
          p.outcome_scaling = parse_scaling(s, sf);
        });
      } else {
        p.with_scaling(parse_scaling(v, vf));
      }
    });
    optional_field(j, f, "superstar_boost", [&](const json& v, const std::string& vf) {
      if (graph.kind != GraphSpec::Kind::kBetaModel || graph.weights) {
        throw ConfigError(vf, "requires a beta_model graph with superstar_probability");
      }
      o.superstar_boost = number(v, vf);
    });
  } else if (model == "fixed_linear") {
    reject_unknown(j, f, {"model", "alpha", "beta", "gamma"});
    o.kind = OutcomeSpec::Kind::kFixedLinear;
    optional_field(j, f, "alpha", [&](const json& v, const std::string& vf) { o.linear.alpha = number(v, vf); });
    optional_field(j, f, "beta", [&](const json& v, const std::string& vf) { o.linear.beta = number(v, vf); });
    optional_field(j, f, "gamma", [&](const json& v, const std::string& vf) { o.linear.gamma = number(v, vf); });
  } else {
    throw ConfigError("outcome.model", "must be one of gmrf, fixed_linear");
  }
  return o;
}

TestSpec parse_test(const json& j) {
  const std::string f = "test";
  require_object(j, f);
  reject_unknown(j, f, {"focal_fraction", "statistic", "resamples", "sidedness"});
  TestSpec t;
  optional_field(j, f, "focal_fraction", [&](const json& v, const std::string& vf) {
    t.focal_fraction = number(v, vf);
    if (!(t.focal_fraction > 0.0 && t.focal_fraction < 1.0)) throw ConfigError(vf, "must lie in (0, 1)");
  });
  optional_field(j, f, "statistic", [&](const json& v, const std::string& vf) {
    const std::string s = string_value(v, vf);
    if (s == "TU") t.statistic = TestStatistic::kTU;
    else if (s == "RankCorrelation") t.statistic = TestStatistic::kRankCorrelation;
    else throw ConfigError(vf, "must be TU or RankCorrelation");
  });
  optional_field(j, f, "resamples", [&](const json& v, const std::string& vf) {
    t.resamples = unsigned_integer(v, vf);
    if (t.resamples < kMinResamples) throw ConfigError(vf, "must be at least 99");
  });
  optional_field(j, f, "sidedness", [&](const json& v, const std::string& vf) {
    const std::string s = string_value(v, vf);
    if (s == "greater") t.sidedness = Sidedness::kGreater;
    else if (s == "two_sided") t.sidedness = Sidedness::kTwoSided;
    else throw ConfigError(vf, "must be greater or two_sided");
  });
  return t;
}

}  // namespace

Scaling parse_scaling(const json& j, const std::string& field) {
  if (j.is_number()) {
    const double c = number(j, field);
    if (!(c > 0.0)) throw ConfigError(field, "constant scaling must be positive");
    return Scaling::constant_value(c);
  }
  const std::string s = string_value(j, field);
  if (s == "degree") return Scaling::degree();
  if (s == "spectral") return Scaling::spectral();
  throw ConfigError(field, "must be degree, spectral, or a positive constant");
}

json scaling_to_json(const Scaling& s) {
  switch (s.kind) {
    case Scaling::Kind::kDegree: return "degree";
    case Scaling::Kind::kSpectral: return "spectral";
    case Scaling::Kind::kConstant: return s.constant;
  }
  return nullptr;
}

Design DesignSpec::build(std::size_t n) const {
  switch (kind) {
    case Kind::kBernoulli:
      return probabilities ? Design::bernoulli(*probabilities) : Design::bernoulli(n, probability);
    case Kind::kComplete: return Design::complete(n_treated);
    case Kind::kCluster: return Design::cluster(labels, probability);
  }
  throw ValidationError("unknown design");
}

SimulationConfig parse_config(const json& j) {
  require_object(j, "config");
  reject_unknown(j, "", {"seed", "scenario", "n", "replications", "graph", "design", "outcome", "test",
                         "effect_draws", "output"});
  SimulationConfig c;
  optional_field(j, "", "seed", [&](const json& v, const std::string& vf) { c.seed = unsigned_integer(v, vf); });
  optional_field(j, "", "scenario", [&](const json& v, const std::string& vf) { c.scenario = string_value(v, vf); });
  if (!j.contains("n")) throw ConfigError("n", "is required");
  c.n = unsigned_integer(j.at("n"), "n");
  if (c.n < 2) throw ConfigError("n", "must be at least 2");
  optional_field(j, "", "replications", [&](const json& v, const std::string& vf) {
    c.replications = unsigned_integer(v, vf);
    if (c.replications < 1) throw ConfigError(vf, "must be at least 1");
  });
  if (!j.contains("graph")) throw ConfigError("graph", "is required");
  c.graph = parse_graph(j.at("graph"), c.n);
  if (j.contains("design")) c.design = parse_design(j.at("design"), c.n);
  if (!j.contains("outcome")) throw ConfigError("outcome", "is required");
  c.outcome = parse_outcome(j.at("outcome"), c.graph);
  if (j.contains("test")) c.test = parse_test(j.at("test"));
  optional_field(j, "", "effect_draws", [&](const json& v, const std::string& vf) {
    c.effect_draws = unsigned_integer(v, vf);
    if (c.effect_draws < 2) throw ConfigError(vf, "must be at least 2");
  });
  optional_field(j, "", "output", [&](const json& v, const std::string& vf) { c.output = string_value(v, vf); });
  return c;
}

SimulationConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

SimulationConfig load_config(std::istream& in) {
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

json to_json(const SimulationConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["scenario"] = c.scenario;
  j["n"] = c.n;
  j["replications"] = c.replications;
  json g;
  switch (c.graph.kind) {
    case GraphSpec::Kind::kRdpg:
      g["model"] = "rdpg";
      if (c.graph.positions) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < c.graph.positions->rows(); ++i) {
          json row = json::array();
          for (Eigen::Index k = 0; k < c.graph.positions->cols(); ++k) row.push_back((*c.graph.positions)(i, k));
          rows.push_back(row);
        }
        g["positions"] = rows;
      } else {
        g["latent"] = {{"a", c.graph.latent_a}, {"b", c.graph.latent_b}};
      }
      g["sparsity"] = c.graph.sparsity;
      break;
    case GraphSpec::Kind::kBetaModel:
      g["model"] = "beta_model";
      if (c.graph.weights) {
        g["weights"] = *c.graph.weights;
      } else {
        g["superstar_probability"] = c.graph.superstar_probability;
        g["weight_low"] = c.graph.weight_low;
        g["weight_high"] = c.graph.weight_high;
      }
      break;
    case GraphSpec::Kind::kEdgeList:
      g["model"] = "edge_list";
      g["path"] = c.graph.path;
      break;
  }
  j["graph"] = g;
  json d;
  switch (c.design.kind) {
    case DesignSpec::Kind::kBernoulli:
      d["type"] = "bernoulli";
      if (c.design.probabilities) d["probabilities"] = *c.design.probabilities;
      else d["probability"] = c.design.probability;
      break;
    case DesignSpec::Kind::kComplete:
      d["type"] = "complete";
      d["n_treated"] = c.design.n_treated;
      break;
    case DesignSpec::Kind::kCluster:
      d["type"] = "cluster";
      d["labels"] = c.design.labels;
      d["probability"] = c.design.probability;
      break;
  }
  j["design"] = d;
  json o;
  if (c.outcome.kind == OutcomeSpec::Kind::kGmrf) {
    const GmrfParams& p = c.outcome.gmrf;
    o = {{"model", "gmrf"}, {"beta", p.beta}, {"gamma", p.gamma}, {"delta", p.delta}, {"sigma2", p.sigma2}};
    o["scaling"] = {{"treatment", scaling_to_json(p.treatment_scaling)},
                    {"outcome", scaling_to_json(p.outcome_scaling)}};
    if (c.outcome.superstar_boost) o["superstar_boost"] = *c.outcome.superstar_boost;
  } else {
    o = {{"model", "fixed_linear"}, {"alpha", c.outcome.linear.alpha}, {"beta", c.outcome.linear.beta},
         {"gamma", c.outcome.linear.gamma}};
  }
  j["outcome"] = o;
  if (c.test) {
    j["test"] = {{"focal_fraction", c.test->focal_fraction},
                 {"statistic", to_string(c.test->statistic)},
                 {"resamples", c.test->resamples},
                 {"sidedness", to_string(c.test->sidedness)}};
  }
  j["effect_draws"] = c.effect_draws;
  if (c.output) j["output"] = *c.output;
  return j;
}

}  // namespace spillover
