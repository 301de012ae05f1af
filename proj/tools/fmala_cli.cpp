// Command-line front end: run experiments, check the theory, compute ESS.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "fmala/harness.hpp"
#include "fmala/theory.hpp"

namespace {

using namespace fmala;

int cmd_run(const std::string& config_path, int replicates, long long seed, bool seed_set,
            const std::string& out_dir, int threads) {
  ExperimentConfig config;
  try {
    config = load_config(config_path);
    if (replicates > 0) config.replicates = replicates;
    if (seed_set) config.base_seed = static_cast<std::uint64_t>(seed);
    if (!out_dir.empty()) config.output = out_dir;
    config.validate();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  ExperimentResult result;
  try {
    result = run_experiment(config, threads);
  } catch (const TargetError& e) {
    std::cerr << "target error: " << e.what() << "\n";
    return kExitTarget;
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n" << e.dump();
    return kExitNumerical;
  }

  try {
    emit_results(result, config.output);
  } catch (const OutputError& e) {
    std::cerr << "output error: " << e.what() << "\n";
    return kExitOutput;
  }

  std::printf("%-24s %-28s %-28s %-28s\n", "sampler", "max ESS", "median ESS", "min ESS");
  for (const auto& s : result.samplers) {
    if (!s.reproduced) {
      std::printf("%-24s not-reproduced (%s)\n", s.display_name.c_str(), s.note.c_str());
      continue;
    }
    std::vector<EssReport> reports;
    for (const auto& r : s.replicates) reports.push_back(r.ess);
    if (reports.size() >= 2) {
      const ReplicateSummary sum = aggregate_replicates(reports);
      std::printf("%-24s %-28s %-28s %-28s\n", s.display_name.c_str(),
                  format_mean_std(sum.max).c_str(), format_mean_std(sum.median).c_str(),
                  format_mean_std(sum.min).c_str());
    } else {
      std::printf("%-24s %-28.3f %-28.3f %-28.3f\n", s.display_name.c_str(), reports[0].max,
                  reports[0].median, reports[0].min);
    }
  }
  std::printf("results written to %s\n", config.output.c_str());
  return kExitOk;
}

int cmd_verify(const theory::VerificationOptions& options) {
  const auto checks = theory::verify_theory(options);
  bool all = true;
  for (const auto& c : checks) {
    std::printf("%s %-32s %s\n", c.holds ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    all = all && c.holds;
  }
  return all ? kExitOk : kExitFailure;
}

int cmd_ess(const std::string& path, bool per_dim) {
  Matrix chain;
  try {
    chain = load_csv_matrix(path);
  } catch (const ParseError& e) {
    std::cerr << "cannot read chain: " << e.what() << "\n";
    return kExitConfig;
  }
  const EssReport r = ess(chain);
  std::printf("samples,dims,max_ess,median_ess,min_ess\n%ld,%ld,%.3f,%.3f,%.3f\n", r.samples,
              static_cast<long>(chain.cols()), r.max, r.median, r.min);
  if (per_dim) {
    std::printf("coordinate,ess,degenerate\n");
    for (std::size_t j = 0; j < r.per_dim.size(); ++j) {
      std::printf("%zu,%.3f,%d\n", j, r.per_dim[j], r.degenerate[j] ? 1 : 0);
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive Langevin samplers with inverse-Fisher preconditioning"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  std::string config_path;
  std::string out_dir;
  int replicates = 0;
  long long seed = 0;
  int threads = 0;
  run->add_option("--config", config_path, "Config file (JSON, or a previous run.json)")
      ->required();
  run->add_option("--replicates", replicates, "Override the number of replicates")
      ->check(CLI::PositiveNumber);
  auto* seed_opt = run->add_option("--seed", seed, "Override the base seed")
                       ->check(CLI::NonNegativeNumber);
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--threads", threads, "Worker threads (default: FMALA_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);

  auto* verify = app.add_subcommand("verify-theory", "Numerically check the ESJD results");
  theory::VerificationOptions vopts;
  verify->add_option("--dim", vopts.dim, "Dimension of the Monte Carlo checks")
      ->check(CLI::PositiveNumber);
  verify->add_option("--mc-samples", vopts.mc_samples, "Monte Carlo draws (>= 10000)")
      ->check(CLI::Range(10000L, 1000000000L));
  verify->add_option("--fishers", vopts.fishers, "Random Fisher matrices")
      ->check(CLI::PositiveNumber);
  verify->add_option("--candidates", vopts.candidates, "Random preconditioners per Fisher matrix")
      ->check(CLI::PositiveNumber);
  verify->add_option("--seed", vopts.seed, "Random seed");

  auto* ess_cmd = app.add_subcommand("ess", "Effective sample size of a stored chain");
  std::string chain_path;
  bool per_dim = false;
  ess_cmd->add_option("--chain", chain_path, "CSV with one row per draw")->required();
  ess_cmd->add_flag("--per-dim", per_dim, "Also print the ESS of every coordinate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path, replicates, seed, seed_opt->count() > 0, out_dir, threads);
    if (*verify) return cmd_verify(vopts);
    if (*ess_cmd) return cmd_ess(chain_path, per_dim);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
