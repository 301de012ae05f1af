#include "fmala/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>

namespace fmala {
namespace {

std::optional<std::size_t> parse_index(const std::string& s) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(std::stoul(s));
}

StepOptions step_options(const SamplerSpec& s) {
  StepOptions o;
  o.rho = s.rho;
  o.target_rate = s.resolved_target_rate();
  o.sigma2_init = s.sigma2_init;
  return o;
}

}  // namespace

std::unique_ptr<TargetModel> make_target(const TargetSpec& spec) {
  try {
    if (spec.name == "gp") {
      return std::make_unique<GaussianTarget>(gaussian_gp_target(spec.dim > 0 ? spec.dim : 100));
    }
    if (spec.name == "inhomogeneous") {
      return std::make_unique<GaussianTarget>(
          gaussian_inhomogeneous(spec.dim > 0 ? spec.dim : 100));
    }
    if (spec.name == "correlated_2d") {
      if (spec.dim > 0 && spec.dim != 2) throw InvalidParameter("correlated_2d is two-dimensional");
      return std::make_unique<GaussianTarget>(gaussian_2d_correlated());
    }
    if (spec.name == "standard_normal") {
      return std::make_unique<GaussianTarget>(standard_normal_target(spec.dim));
    }
    if (spec.name == "synthetic_logistic") {
      return std::make_unique<LogisticRegressionTarget>(
          synthetic_logistic(spec.dim > 0 ? spec.dim : 20, spec.rows, spec.data_seed));
    }
    if (spec.name == "csv") {
      DatasetOptions opts;
      opts.add_bias = spec.add_bias;
      opts.pixel_scale = spec.pixel_scale;
      LabelColumn label = spec.label;
      if (const auto idx = parse_index(spec.label)) label = *idx;
      return std::make_unique<LogisticRegressionTarget>(load_csv_dataset(spec.path, label, opts));
    }
  } catch (const std::exception& e) {
    throw TargetError("cannot build target '" + spec.name + "': " + e.what());
  }
  throw TargetError("unknown target '" + spec.name + "'");
}

std::unique_ptr<Kernel> make_kernel(const SamplerSpec& spec, const TargetModel& target) {
  const Index d = target.dim();
  if (spec.name == "mala") return std::make_unique<SimpleMalaKernel>(d, step_options(spec));
  if (spec.name == "fisher_mala") {
    FisherMalaOptions o;
    o.lambda = spec.lambda;
    o.step = step_options(spec);
    o.init_iters = spec.init_iters;
    o.signal = signal_mode_from_string(spec.signal);
    return std::make_unique<FisherMalaKernel>(d, o);
  }
  if (spec.name == "ada_mala") {
    AdaMalaOptions o;
    o.lambda = spec.lambda;
    o.step = step_options(spec);
    o.init_iters = spec.init_iters;
    o.warmup_iters = spec.warmup_iters;
    return std::make_unique<AdaMalaKernel>(d, o);
  }
  if (spec.name == "mmala") return std::make_unique<MmalaKernel>(target, step_options(spec));
  if (spec.name == "hmc") {
    HmcOptions o;
    o.leapfrog_steps = spec.leapfrog_steps;
    o.rho = spec.rho;
    o.target_rate = spec.resolved_target_rate();
    o.sigma2_init = spec.sigma2_init;
    return std::make_unique<HmcKernel>(d, o);
  }
  throw InvalidParameter("unknown sampler '" + spec.name + "'");
}

bool KernelSnapshot::operator==(const KernelSnapshot& o) const {
  if (sigma2 != o.sigma2 || preconditioner.has_value() != o.preconditioner.has_value()) {
    return false;
  }
  return !preconditioner || *preconditioner == *o.preconditioner;
}

KernelSnapshot snapshot(const Kernel& kernel) {
  return {kernel.sigma2(), kernel.preconditioner()};
}

ChainRun run_chain(Kernel& kernel, const TargetModel& target, Vector x0, Rng& rng,
                   const ChainOptions& o) {
  if (o.burn_in < 0 || o.collect < 0 || o.trace_every < 1) {
    throw InvalidParameter("run_chain: negative length or trace interval < 1");
  }
  const Index d = target.dim();
  ChainRun run;
  ChainState state = ChainState::at(target, std::move(x0));
  const Matrix identity = Matrix::Identity(d, d);
  long accepted = 0;
  for (long i = 1; i <= o.burn_in; ++i) {
    const StepDiagnostics diag = kernel.step(state, target, rng);
    accepted += diag.accepted ? 1 : 0;
    if (i % o.trace_every == 0) {
      run.trace.iteration.push_back(i);
      run.trace.log_target.push_back(state.logpi);
      run.trace.running_acceptance.push_back(static_cast<double>(accepted) /
                                             static_cast<double>(i));
      if (o.reference_covariance != nullptr) {
        const auto a = kernel.preconditioner();
        run.trace.frobenius_norm.push_back(
            frobenius_distance(a ? *a : identity, *o.reference_covariance));
      }
    }
  }
  run.burn_in_acceptance =
      o.burn_in > 0 ? static_cast<double>(accepted) / static_cast<double>(o.burn_in) : 0.0;

  kernel.freeze();
  run.at_freeze = snapshot(kernel);

  if (o.keep_samples) run.samples.resize(o.collect, d);
  accepted = 0;
  for (long i = 0; i < o.collect; ++i) {
    const StepDiagnostics diag = kernel.step(state, target, rng);
    accepted += diag.accepted ? 1 : 0;
    if (o.keep_samples) run.samples.row(i) = state.x.transpose();
  }
  run.collect_acceptance =
      o.collect > 0 ? static_cast<double>(accepted) / static_cast<double>(o.collect) : 0.0;
  run.at_end = snapshot(kernel);
  run.anomalies = kernel.anomalies();
  return run;
}

int worker_count() {
  if (const char* env = std::getenv("FMALA_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentResult run_experiment(const ExperimentConfig& config, int threads) {
  config.validate();
  const std::unique_ptr<TargetModel> target = make_target(config.target);
  const auto* gaussian = dynamic_cast<const GaussianTarget*>(target.get());

  ExperimentResult result;
  result.config = config;
  result.target_name = target->name();
  result.has_reference_covariance = gaussian != nullptr;

  struct Item {
    std::size_t sampler;
    int replicate;
  };
  std::vector<Item> items;
  for (std::size_t s = 0; s < config.samplers.size(); ++s) {
    SamplerResult sr;
    sr.spec = config.samplers[s];
    try {
      sr.display_name = sr.spec.label.empty() ? make_kernel(sr.spec, *target)->name()
                                              : sr.spec.label;
    } catch (const UnsupportedTarget& e) {
      sr.display_name = sr.spec.label.empty() ? sr.spec.name : sr.spec.label;
      sr.reproduced = false;
      sr.note = e.what();
    }
    if (sr.reproduced) {
      sr.replicates.resize(static_cast<std::size_t>(config.replicates));
      for (int r = 0; r < config.replicates; ++r) items.push_back({s, r});
    }
    result.samplers.push_back(std::move(sr));
  }

  ChainOptions chain;
  chain.burn_in = config.burn_in;
  chain.collect = config.collect;
  chain.trace_every = config.trace_every;
  chain.reference_covariance = gaussian != nullptr ? &gaussian->covariance() : nullptr;

  std::vector<std::exception_ptr> errors(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < items.size(); k = next++) {
      try {
        const Item& item = items[k];
        SamplerResult& sr = result.samplers[item.sampler];
        Rng rng = make_stream(config.base_seed, static_cast<std::uint64_t>(item.replicate));
        Vector x0 = standard_normal(rng, target->dim());
        SamplerSpec spec = sr.spec;
        if (spec.sigma2_init <= 0.0 && spec.name != "mmala" && spec.name != "hmc") {
          spec.sigma2_init = search_initial_sigma2(*target, ChainState::at(*target, x0),
                                                   default_sigma2(target->dim()), rng);
        }
        const std::unique_ptr<Kernel> kernel = make_kernel(spec, *target);
        ChainRun run = run_chain(*kernel, *target, std::move(x0), rng, chain);
        ReplicateResult& rr = sr.replicates[static_cast<std::size_t>(item.replicate)];
        rr.replicate = item.replicate;
        rr.ess = ess(run.samples);
        rr.trace = std::move(run.trace);
        rr.burn_in_acceptance = run.burn_in_acceptance;
        rr.collect_acceptance = run.collect_acceptance;
        rr.anomalies = run.anomalies;
        rr.at_freeze = std::move(run.at_freeze);
        rr.at_end = std::move(run.at_end);
        if (config.save_chains) rr.samples = std::move(run.samples);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int n_threads =
      std::max(1, std::min<int>(threads > 0 ? threads : worker_count(),
                                static_cast<int>(std::max<std::size_t>(1, items.size()))));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return result;
}

}  // namespace fmala
