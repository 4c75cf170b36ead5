// SPDX-License-Identifier: Apache-2.0
#include "lrwsde/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "lrwsde/quantise.hpp"

namespace lrwsde {

namespace {

using nlohmann::json;

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  const double llo = std::log10(lo), lhi = std::log10(hi);
  for (int i = 0; i < n; ++i)
    g[i] = std::pow(10.0, llo + (lhi - llo) * i / (n - 1));
  return g;
}

const std::set<std::string> kSchemes = {"lrw", "em", "two_point"};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(std::string_view experiment) {
  ExperimentConfig c;
  c.experiment = std::string(experiment);
  if (experiment == "ou-grid") {
    c.schemes = {"lrw"};
    c.dt_grid = log_grid(1e-3, 1e-1, 7);
    c.dx_rule = "multipliers";
    c.dx_multipliers = {0.5, 0.75, 1.0, 1.5, 2.0, 4.0};
    c.seeds = 10;
    c.steps = 1000000;
    c.burn_in = 1.0 / 3.0;
    c.out = "ou_grid.csv";
    c.model.type = "ou";
  } else if (experiment == "ou-quant") {
    c.schemes = {"lrw", "em"};
    c.dt_grid = log_grid(1e-3, 1e-1, 7);
    c.precisions = {"fp8", "fp16", "fp32"};
    c.seeds = 50;
    c.steps = 1000000;
    c.burn_in = 1.0 / 3.0;
    c.out = "ou_quant.csv";
    c.model.type = "ou";
  } else if (experiment == "poisson") {
    c.schemes = {"lrw", "em"};
    c.dt_grid = log_grid(1e-3, 0.5, 8);
    c.seeds = 100;
    c.steps = 50000;
    c.burn_in = 0.0;
    c.out = "poisson.csv";
    c.model.type = "poisson";
    c.model.d = 51;
  } else if (experiment == "converge") {
    c.schemes = {"lrw", "em"};
    c.dt_grid = {0.2, 0.1, 0.05, 0.025};
    c.replicas = 100000;
    c.out = "converge.csv";
  } else if (experiment == "simulate") {
    c.scheme = "lrw";
    c.dt = 0.01;
    c.steps = 1000;
    c.stride = 1;
    c.out = "simulate.csv";
    c.model.type = "ou";
  } else {
    throw ConfigError("unknown experiment: " + std::string(experiment));
  }
  return c;
}

void ExperimentConfig::apply_scale(double scale) {
  require(scale > 0.0, "--scale must be > 0");
  auto scaled = [scale](std::int64_t v) {
    return std::max<std::int64_t>(
        1, std::llround(static_cast<double>(v) * scale));
  };
  if (steps > 0) steps = scaled(steps);
  if (seeds > 0) seeds = scaled(seeds);
  if (replicas > 0) replicas = scaled(replicas);
}

void ExperimentConfig::validate() const {
  require(!out.empty(), "output path must be nonempty");
  if (experiment == "simulate") {
    require(dt > 0.0, "dt must be > 0");
    require(steps >= 1, "steps must be >= 1");
    require(stride >= 1, "stride must be >= 1");
    require(dx_multiplier > 0.0, "dx_multiplier must be > 0");
    require(kSchemes.count(scheme) == 1, "unknown scheme: " + scheme);
    require(model.type == "ou" || model.type == "poisson" ||
                model.type == "gaussian-flow",
            "unknown model type: " + model.type);
    if (!precision.empty()) PrecisionFormat::from_name(precision);
    return;
  }
  require(!dt_grid.empty(), "dt grid must be nonempty");
  for (double v : dt_grid) require(v > 0.0, "dt grid entries must be > 0");
  require(seeds >= 1 || experiment == "converge", "seeds must be >= 1");
  require(!schemes.empty(), "scheme list must be nonempty");
  for (const auto& s : schemes)
    require(kSchemes.count(s) == 1, "unknown scheme: " + s);
  require(burn_in >= 0.0 && burn_in < 1.0, "burn_in must be in [0, 1)");
  require(dx_rule == "rule_of_thumb" || dx_rule == "multipliers",
          "dx_rule must be rule_of_thumb or multipliers");

  if (experiment == "ou-grid") {
    require(schemes == std::vector<std::string>{"lrw"},
            "ou-grid runs the lrw scheme only");
    require(dx_rule == "multipliers" && !dx_multipliers.empty(),
            "ou-grid needs a dx multiplier grid");
    for (double m : dx_multipliers)
      require(m > 0.0, "dx multipliers must be > 0");
    require(steps >= 1, "steps must be >= 1");
    require(precisions.empty(), "ou-grid does not support precisions");
  } else if (experiment == "ou-quant") {
    require(dx_rule == "rule_of_thumb", "ou-quant uses the rule-of-thumb dx");
    require(!precisions.empty(), "ou-quant needs a precision list");
    for (const auto& p : precisions) PrecisionFormat::from_name(p);
    require(steps >= 1, "steps must be >= 1");
  } else if (experiment == "poisson") {
    require(dx_rule == "rule_of_thumb", "poisson uses the rule-of-thumb dx");
    require(precisions.empty(), "poisson does not support precisions");
    require(steps >= 1, "steps must be >= 1");
    require(model.d >= 1 && model.J >= 1, "model d, J must be >= 1");
    require(model.sigma1 > 0.0, "model sigma1 must be > 0");
  } else if (experiment == "converge") {
    require(replicas >= 1, "replicas must be >= 1");
    require(dt_grid.size() >= 3, "converge needs at least 3 dt grid points");
    require(precisions.empty(), "converge does not support precisions");
  } else {
    throw ConfigError("unknown experiment: " + experiment);
  }

  if (experiment == "ou-grid" || experiment == "ou-quant") {
    require(model.type == "ou", "model type must be ou");
    require(model.d >= 1, "model d must be >= 1");
    require(model.temperature > 0.0, "model temperature must be > 0");
    const double retained =
        static_cast<double>(steps) * (1.0 - burn_in);
    require(retained >= static_cast<double>(model.d + 1),
            "too few post-burn-in samples for a covariance estimate");
  }
}

namespace {

json model_to_json(const ExperimentConfig& c) {
  const ModelConfig& m = c.model;
  json j;
  j["type"] = m.type;
  if (m.type == "ou") {
    j["d"] = m.d;
    j["temperature"] = m.temperature;
    if (m.A) {
      std::vector<std::vector<double>> rows;
      for (Index i = 0; i < m.A->rows(); ++i) {
        std::vector<double> r(m.A->cols());
        for (Index k = 0; k < m.A->cols(); ++k) r[k] = (*m.A)(i, k);
        rows.push_back(std::move(r));
      }
      j["A"] = rows;
      std::vector<double> bv(m.b->size());
      for (Index i = 0; i < m.b->size(); ++i) bv[i] = (*m.b)[i];
      j["b"] = bv;
    } else {
      j["param_seed"] = m.param_seed;
    }
  } else if (m.type == "poisson") {
    j["d"] = m.d;
    j["J"] = m.J;
    j["sigma1"] = m.sigma1;
    j["param_seed"] = m.param_seed;
  } else if (m.type == "gaussian-flow") {
    j["sigma_data"] = m.sigma_data;
    j["sigma0"] = m.sigma0;
    j["rate"] = m.rate;
    j["alpha_multiplier"] = m.alpha_multiplier;
  }
  return j;
}

void model_from_json(const json& j, ModelConfig& m,
                     const std::string& experiment) {
  std::set<std::string> allowed;
  if (experiment == "poisson") {
    allowed = {"type", "d", "J", "sigma1", "param_seed"};
  } else if (experiment == "simulate") {
    allowed = {"type",       "d",    "temperature",      "A",
               "b",          "J",    "sigma1",           "param_seed",
               "sigma_data", "sigma0", "rate", "alpha_multiplier"};
  } else {
    allowed = {"type", "d", "temperature", "param_seed"};
  }
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key))
      throw ConfigError("unknown model key: " + key);
    try {
      if (key == "type") {
        m.type = value.get<std::string>();
      } else if (key == "d") {
        m.d = value.get<Index>();
      } else if (key == "temperature") {
        m.temperature = value.get<double>();
      } else if (key == "J") {
        m.J = value.get<Index>();
      } else if (key == "sigma1") {
        m.sigma1 = value.get<double>();
      } else if (key == "param_seed") {
        m.param_seed = value.get<std::uint64_t>();
      } else if (key == "sigma_data") {
        m.sigma_data = value.get<double>();
      } else if (key == "sigma0") {
        m.sigma0 = value.get<double>();
      } else if (key == "rate") {
        m.rate = value.get<double>();
      } else if (key == "alpha_multiplier") {
        m.alpha_multiplier = value.get<double>();
      } else if (key == "A") {
        auto rows = value.get<std::vector<std::vector<double>>>();
        const Index n = static_cast<Index>(rows.size());
        Matrix A(n, n);
        for (Index i = 0; i < n; ++i) {
          if (static_cast<Index>(rows[i].size()) != n)
            throw ConfigError("model A must be square");
          for (Index k = 0; k < n; ++k) A(i, k) = rows[i][k];
        }
        m.A = A;
      } else if (key == "b") {
        auto bv = value.get<std::vector<double>>();
        Vector b(static_cast<Index>(bv.size()));
        for (Index i = 0; i < b.size(); ++i) b[i] = bv[i];
        m.b = b;
      }
    } catch (const json::exception& e) {
      throw ConfigError("bad value for model key '" + key + "': " + e.what());
    }
  }
  if (bool(m.A) != bool(m.b))
    throw ConfigError("model A and b must be given together");
  if (m.A) m.d = m.A->rows();
}

std::set<std::string> allowed_keys(const std::string& experiment) {
  if (experiment == "ou-grid")
    return {"experiment", "schemes",  "dt_grid", "dx_rule",
            "dx_multipliers", "seeds", "base_seed", "steps",
            "burn_in",    "out",      "model"};
  if (experiment == "ou-quant")
    return {"experiment", "schemes", "dt_grid",  "dx_rule", "precisions",
            "seeds",      "base_seed", "steps",  "burn_in", "out",
            "model"};
  if (experiment == "poisson")
    return {"experiment", "schemes", "dt_grid", "dx_rule", "seeds",
            "base_seed",  "steps",   "burn_in", "out",     "model"};
  if (experiment == "converge")
    return {"experiment", "schemes", "dt_grid", "replicas", "base_seed",
            "out"};
  if (experiment == "simulate")
    return {"experiment", "scheme", "dt",        "steps", "stride",
            "dx_multiplier", "precision", "base_seed", "out",   "model"};
  throw ConfigError("unknown experiment: " + experiment);
}

}  // namespace

nlohmann::json ExperimentConfig::to_json() const {
  json j;
  j["experiment"] = experiment;
  j["base_seed"] = base_seed;
  j["out"] = out;
  if (experiment == "simulate") {
    j["scheme"] = scheme;
    j["dt"] = dt;
    j["steps"] = steps;
    j["stride"] = stride;
    j["dx_multiplier"] = dx_multiplier;
    if (!precision.empty()) j["precision"] = precision;
    j["model"] = model_to_json(*this);
    return j;
  }
  j["schemes"] = schemes;
  j["dt_grid"] = dt_grid;
  if (experiment == "converge") {
    j["replicas"] = replicas;
    return j;
  }
  j["dx_rule"] = dx_rule;
  if (experiment == "ou-grid") j["dx_multipliers"] = dx_multipliers;
  if (experiment == "ou-quant") j["precisions"] = precisions;
  j["seeds"] = seeds;
  j["steps"] = steps;
  j["burn_in"] = burn_in;
  j["model"] = model_to_json(*this);
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j,
                                             std::string_view experiment) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c = defaults(experiment);
  const auto allowed = allowed_keys(c.experiment);
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown config key: " + key);
    try {
      if (key == "experiment") {
        if (value.get<std::string>() != c.experiment)
          throw ConfigError("config experiment '" +
                            value.get<std::string>() +
                            "' does not match subcommand '" + c.experiment +
                            "'");
      } else if (key == "schemes") {
        c.schemes = value.get<std::vector<std::string>>();
      } else if (key == "dt_grid") {
        c.dt_grid = value.get<std::vector<double>>();
      } else if (key == "dx_rule") {
        c.dx_rule = value.get<std::string>();
      } else if (key == "dx_multipliers") {
        c.dx_multipliers = value.get<std::vector<double>>();
      } else if (key == "precisions") {
        c.precisions = value.get<std::vector<std::string>>();
      } else if (key == "seeds") {
        c.seeds = value.get<std::int64_t>();
      } else if (key == "base_seed") {
        c.base_seed = value.get<std::uint64_t>();
      } else if (key == "steps") {
        c.steps = value.get<std::int64_t>();
      } else if (key == "replicas") {
        c.replicas = value.get<std::int64_t>();
      } else if (key == "burn_in") {
        c.burn_in = value.get<double>();
      } else if (key == "out") {
        c.out = value.get<std::string>();
      } else if (key == "scheme") {
        c.scheme = value.get<std::string>();
      } else if (key == "dt") {
        c.dt = value.get<double>();
      } else if (key == "stride") {
        c.stride = value.get<std::int64_t>();
      } else if (key == "dx_multiplier") {
        c.dx_multiplier = value.get<double>();
      } else if (key == "precision") {
        c.precision = value.get<std::string>();
      } else if (key == "model") {
        if (!value.is_object()) throw ConfigError("model must be an object");
        model_from_json(value, c.model, c.experiment);
      }
    } catch (const json::exception& e) {
      throw ConfigError("bad value for config key '" + key + "': " + e.what());
    }
  }
  c.validate();
  return c;
}

}  // namespace lrwsde
