#include "fmala/config.hpp"

#include <fstream>
#include <set>

namespace fmala {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const char* where) {
  for (const auto& [key, value] : obj.items()) {
    if (allowed.count(key) == 0) {
      throw ConfigError(std::string("unknown key '") + key + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

TargetSpec target_from_json(const json& j) {
  if (j.is_string()) {
    TargetSpec t;
    t.name = j.get<std::string>();
    return t;
  }
  if (!j.is_object()) throw ConfigError("'target' must be an object or a name");
  reject_unknown(j, {"name", "dim", "rows", "data_seed", "path", "label", "add_bias", "pixel_scale"},
                 "target");
  TargetSpec t;
  read(j, "name", t.name);
  read(j, "dim", t.dim);
  read(j, "rows", t.rows);
  read(j, "data_seed", t.data_seed);
  read(j, "path", t.path);
  if (j.contains("label")) {
    const json& l = j.at("label");
    if (l.is_number_integer()) {
      t.label = std::to_string(l.get<long>());
    } else if (l.is_string()) {
      t.label = l.get<std::string>();
    } else {
      throw ConfigError("'label' must be a column name or index");
    }
  }
  read(j, "add_bias", t.add_bias);
  read(j, "pixel_scale", t.pixel_scale);
  return t;
}

SamplerSpec sampler_from_json(const json& j) {
  if (j.is_string()) {
    SamplerSpec s;
    s.name = j.get<std::string>();
    return s;
  }
  if (!j.is_object()) throw ConfigError("a sampler entry must be an object or a name");
  reject_unknown(j,
                 {"name", "label", "lambda", "rho", "target_rate", "init_iters", "warmup_iters",
                  "signal", "leapfrog_steps", "sigma2_init"},
                 "sampler");
  SamplerSpec s;
  read(j, "name", s.name);
  read(j, "label", s.label);
  read(j, "lambda", s.lambda);
  read(j, "rho", s.rho);
  read(j, "target_rate", s.target_rate);
  read(j, "init_iters", s.init_iters);
  read(j, "warmup_iters", s.warmup_iters);
  read(j, "signal", s.signal);
  read(j, "leapfrog_steps", s.leapfrog_steps);
  read(j, "sigma2_init", s.sigma2_init);
  return s;
}

json to_json(const SamplerSpec& s) {
  return json{{"name", s.name},
              {"label", s.label},
              {"lambda", s.lambda},
              {"rho", s.rho},
              {"target_rate", s.resolved_target_rate()},
              {"init_iters", s.init_iters},
              {"warmup_iters", s.warmup_iters},
              {"signal", s.signal},
              {"leapfrog_steps", s.leapfrog_steps},
              {"sigma2_init", s.sigma2_init}};
}

}  // namespace

double SamplerSpec::resolved_target_rate() const {
  if (target_rate > 0.0) return target_rate;
  return name == "hmc" ? 0.651 : 0.574;
}

void ExperimentConfig::validate() const {
  static const std::set<std::string> targets = {"gp",           "inhomogeneous",
                                                "correlated_2d", "standard_normal",
                                                "synthetic_logistic", "csv"};
  static const std::set<std::string> kernels = {"mala", "fisher_mala", "ada_mala", "mmala", "hmc"};
  if (targets.count(target.name) == 0) throw ConfigError("unknown target '" + target.name + "'");
  if (target.name == "csv" && target.path.empty()) throw ConfigError("csv target needs a 'path'");
  if (target.name == "standard_normal" && target.dim < 1) {
    throw ConfigError("standard_normal target needs 'dim' >= 1");
  }
  if (samplers.empty()) throw ConfigError("no sampler configured");
  if (burn_in < 0) throw ConfigError("burn_in must be >= 0");
  if (collect < 100) throw ConfigError("collect must be >= 100 for ESS estimation");
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (trace_every < 1) throw ConfigError("trace_every must be >= 1");
  std::set<std::string> labels;
  for (const auto& s : samplers) {
    if (kernels.count(s.name) == 0) throw ConfigError("unknown sampler '" + s.name + "'");
    if (s.init_iters < 0) throw ConfigError("init_iters must be >= 0");
    if (burn_in < s.init_iters) {
      throw ConfigError("burn_in (" + std::to_string(burn_in) + ") must be >= init_iters (" +
                        std::to_string(s.init_iters) + ")");
    }
    if (s.signal != "rb" && s.signal != "no_rb" && s.signal != "paired") {
      throw ConfigError("unknown signal mode '" + s.signal + "'");
    }
    if (!(s.lambda > 0.0)) throw ConfigError("lambda must be positive");
    if (!(s.rho > 0.0 && s.rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
    if (s.target_rate >= 1.0) throw ConfigError("target_rate must lie in (0, 1)");
    if (s.leapfrog_steps < 1) throw ConfigError("leapfrog_steps must be >= 1");
    if (s.warmup_iters < 2) throw ConfigError("warmup_iters must be >= 2");
    if (!s.label.empty() && !labels.insert(s.label).second) {
      throw ConfigError("duplicate sampler label '" + s.label + "'");
    }
  }
}

ExperimentConfig config_from_json(const json& root) {
  const json& j = root.contains("config") ? root.at("config") : root;
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  reject_unknown(j,
                 {"target", "sampler", "samplers", "burn_in", "collect", "replicates",
                  "base_seed", "output", "trace_every", "save_chains"},
                 "configuration");
  ExperimentConfig c;
  if (j.contains("target")) c.target = target_from_json(j.at("target"));
  if (j.contains("sampler") && j.contains("samplers")) {
    throw ConfigError("give either 'sampler' or 'samplers', not both");
  }
  if (j.contains("sampler")) c.samplers.push_back(sampler_from_json(j.at("sampler")));
  if (j.contains("samplers")) {
    if (!j.at("samplers").is_array()) throw ConfigError("'samplers' must be an array");
    for (const auto& s : j.at("samplers")) c.samplers.push_back(sampler_from_json(s));
  }
  read(j, "burn_in", c.burn_in);
  read(j, "collect", c.collect);
  read(j, "replicates", c.replicates);
  read(j, "base_seed", c.base_seed);
  read(j, "output", c.output);
  read(j, "trace_every", c.trace_every);
  read(j, "save_chains", c.save_chains);
  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json samplers = json::array();
  for (const auto& s : c.samplers) samplers.push_back(to_json(s));
  return json{{"target",
               {{"name", c.target.name},
                {"dim", c.target.dim},
                {"rows", c.target.rows},
                {"data_seed", c.target.data_seed},
                {"path", c.target.path},
                {"label", c.target.label},
                {"add_bias", c.target.add_bias},
                {"pixel_scale", c.target.pixel_scale}}},
              {"samplers", samplers},
              {"burn_in", c.burn_in},
              {"collect", c.collect},
              {"replicates", c.replicates},
              {"base_seed", c.base_seed},
              {"output", c.output},
              {"trace_every", c.trace_every},
              {"save_chains", c.save_chains}};
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
  return config_from_json(j);
}

}  // namespace fmala
