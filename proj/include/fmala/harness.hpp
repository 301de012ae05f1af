#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fmala/config.hpp"
#include "fmala/diagnostics.hpp"
#include "fmala/samplers.hpp"
#include "fmala/targets.hpp"

namespace fmala {

/// Builds the target described by `spec`; failures raise TargetError.
std::unique_ptr<TargetModel> make_target(const TargetSpec& spec);

/// Builds a fresh kernel. Throws UnsupportedTarget for mmala on a
/// non-Gaussian target.
std::unique_ptr<Kernel> make_kernel(const SamplerSpec& spec, const TargetModel& target);

/// Step size and preconditioner of a kernel at one moment.
struct KernelSnapshot {
  double sigma2 = 0.0;
  std::optional<Matrix> preconditioner;

  bool operator==(const KernelSnapshot& o) const;
};
KernelSnapshot snapshot(const Kernel& kernel);

struct ChainOptions {
  long burn_in = 20000;
  long collect = 20000;
  long trace_every = 100;
  /// When set, the trace records the Frobenius distance of the normalized
  /// preconditioner (identity if the kernel has none) to this matrix.
  const Matrix* reference_covariance = nullptr;
  bool keep_samples = true;
};

struct ChainRun {
  /// collect x d, empty unless keep_samples.
  Matrix samples;
  AdaptationTrace trace;
  double burn_in_acceptance = 0.0;
  double collect_acceptance = 0.0;
  long anomalies = 0;
  KernelSnapshot at_freeze;
  KernelSnapshot at_end;
};

/// Burn-in with adaptation, freeze, then collection.
ChainRun run_chain(Kernel& kernel, const TargetModel& target, Vector x0, Rng& rng,
                   const ChainOptions& options);

struct ReplicateResult {
  int replicate = 0;
  EssReport ess;
  AdaptationTrace trace;
  double burn_in_acceptance = 0.0;
  double collect_acceptance = 0.0;
  long anomalies = 0;
  KernelSnapshot at_freeze;
  KernelSnapshot at_end;
  /// Only filled when the configuration asks for saved chains.
  Matrix samples;
};

struct SamplerResult {
  SamplerSpec spec;
  std::string display_name;
  /// False when the sampler cannot run on this target; `note` says why.
  bool reproduced = true;
  std::string note;
  std::vector<ReplicateResult> replicates;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string target_name;
  bool has_reference_covariance = false;
  std::vector<SamplerResult> samplers;
};

/// Replicate r of every sampler draws from stream (base_seed, r): first
/// x_1 ~ N(0, I), then the chain. Work items run on `threads` workers
/// (0 means worker_count()); results do not depend on the thread count.
ExperimentResult run_experiment(const ExperimentConfig& config, int threads = 0);

/// FMALA_THREADS if set to a positive integer, else hardware concurrency.
int worker_count();

/// Writes ess.csv, ess_summary.csv, trace.csv, parameters.csv and run.json
/// (plus chains/ when requested) into `dir`. Raises OutputError.
void emit_results(const ExperimentResult& result, const std::string& dir);

/// Process exit codes of the command-line runner.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitTarget = 3,
  kExitNumerical = 4,
  kExitOutput = 5,
};

}  // namespace fmala
