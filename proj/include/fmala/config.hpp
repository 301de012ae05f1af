#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmala/types.hpp"

namespace fmala {

/// Which target to sample. `dim` <= 0 selects the target's default size.
struct TargetSpec {
  std::string name = "gp";
  Index dim = 0;
  /// synthetic_logistic only.
  Index rows = 500;
  std::uint64_t data_seed = 20231;
  /// csv only. `label` is a header name or, when it parses as an integer,
  /// a zero-based column index.
  std::string path;
  std::string label = "0";
  bool add_bias = false;
  bool pixel_scale = false;
};

/// Sampler name plus hyperparameters. Unset fields keep the defaults of the
/// standard benchmark protocol.
struct SamplerSpec {
  /// mala | fisher_mala | ada_mala | mmala | hmc
  std::string name = "fisher_mala";
  /// Display name in result files; empty means the kernel's own name.
  std::string label;
  double lambda = 10.0;
  double rho = 0.015;
  /// <= 0 selects 0.574 (Langevin kernels) or 0.651 (HMC).
  double target_rate = 0.0;
  long init_iters = 500;
  long warmup_iters = 500;
  /// rb | no_rb | paired
  std::string signal = "rb";
  int leapfrog_steps = 10;
  /// <= 0 selects 2.38^2 / d.
  double sigma2_init = 0.0;

  double resolved_target_rate() const;
};

struct ExperimentConfig {
  TargetSpec target;
  std::vector<SamplerSpec> samplers;
  long burn_in = 20000;
  long collect = 20000;
  int replicates = 10;
  std::uint64_t base_seed = 0;
  std::string output = "results";
  /// Burn-in iterations between trace records.
  long trace_every = 100;
  /// Also write every collected sample to chains/<sampler>_<replicate>.csv.
  bool save_chains = false;

  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;
};

/// Parses a configuration object. A document with a top-level "config" key
/// (a previous run.json) is unwrapped first. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);

/// Reads and parses a JSON config file; all failures raise ConfigError.
ExperimentConfig load_config(const std::string& path);

}  // namespace fmala
