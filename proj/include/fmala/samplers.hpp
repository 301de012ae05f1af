#pragma once

#include <memory>
#include <optional>
#include <string>

#include "fmala/preconditioner.hpp"
#include "fmala/targets.hpp"

namespace fmala {

/// Current position with cached log-density and gradient.
struct ChainState {
  Vector x;
  double logpi = 0.0;
  Vector grad;

  /// Evaluates the target once at `x`.
  static ChainState at(const TargetModel& target, Vector x);
};

/// Per-step outcome reported by every kernel.
struct StepDiagnostics {
  double alpha = 0.0;
  bool accepted = false;
  /// Target returned a non-finite value at the proposal (auto-rejected).
  bool anomaly = false;
};

/// Global step size sigma^2 adapted multiplicatively towards an acceptance
/// rate: sigma^2 <- sigma^2 [1 + rho (alpha - target_rate)].
class StepSizeController {
 public:
  /// Throws InvalidParameter unless sigma2 > 0, 0 < rho < 1 and
  /// 0 < target_rate < 1.
  StepSizeController(double sigma2, double target_rate, double rho = 0.015);

  /// Requires adapting(); alpha must lie in [0, 1].
  void adapt(double alpha);

  double sigma2() const { return sigma2_; }
  double rho() const { return rho_; }
  double target_rate() const { return target_rate_; }
  bool adapting() const { return adapting_; }
  void set_adapting(bool on) { adapting_ = on; }
  void set_sigma2(double sigma2);

 private:
  double sigma2_;
  double rho_;
  double target_rate_;
  bool adapting_ = true;
};

/// y = x + (sigma2_R / 2) R (R^T grad) + sqrt(sigma2_R) R noise.
Vector mala_propose(const ChainState& state, const Matrix& R, double sigma2_R,
                    const Vector& noise);

/// h(z, v) = 0.5 (z - v - (sigma2 / 4) A grad_v)^T grad_v with
/// A grad_v supplied by the caller. The preconditioned-MALA proposal ratio
/// is log q(x|y) - log q(y|x) = h(x, y) - h(y, x).
double h_term(const Vector& z, const Vector& v, const Vector& grad_v, const Vector& A_grad_v,
              double sigma2);

/// Result of one proposal plus Metropolis-Hastings test, before the kernel
/// decides what to adapt.
struct MalaTransition {
  ChainState candidate;
  double log_ratio = 0.0;
  double alpha = 0.0;
  bool accepted = false;
  bool anomaly = false;
};

/// Draws noise then one uniform from `rng`, proposes with square root `R`
/// (nullptr means the identity) and normalized step `sigma2_R`, evaluates
/// the target once at the proposal and performs the accept test in log
/// space. Does not modify `state`.
MalaTransition mala_transition(const ChainState& state, const TargetModel& target,
                               const Matrix* R, double sigma2_R, Rng& rng);

enum class Phase { InitMala, Warmup, Adapting, Frozen };
const char* to_string(Phase phase);

enum class SignalMode { RaoBlackwell, NoRaoBlackwell, Paired };
const char* to_string(SignalMode mode);
SignalMode signal_mode_from_string(const std::string& s);

/// A Metropolis-Hastings transition kernel with its own adaptive state.
/// One kernel drives one chain.
class Kernel {
 public:
  virtual ~Kernel() = default;

  /// Advances `state` by one iteration. Adaptation happens only while the
  /// kernel is not frozen.
  virtual StepDiagnostics step(ChainState& state, const TargetModel& target, Rng& rng) = 0;

  /// Stops all adaptation; later steps reuse the current parameters.
  virtual void freeze() = 0;

  virtual Phase phase() const = 0;
  virtual std::string name() const = 0;
  virtual double sigma2() const = 0;

  /// Current (unnormalized) preconditioner A, or nullopt when the kernel has
  /// none (identity). O(d^3) for square-root kernels.
  virtual std::optional<Matrix> preconditioner() const { return std::nullopt; }

  long anomalies() const { return anomalies_; }

 protected:
  long anomalies_ = 0;
};

/// Shared defaults. sigma2_init <= 0 selects 2.38^2 / d.
struct StepOptions {
  double rho = 0.015;
  double target_rate = 0.574;
  double sigma2_init = 0.0;
};

double default_sigma2(Index dim);

/// Starting from `sigma2`, doubles or halves the identity-preconditioned MALA
/// step until the acceptance probability of one fixed-noise proposal from
/// `state` crosses 1/2, and returns the first value past the crossing. Draws
/// one noise vector from `rng`; costs one target evaluation per trial (at
/// most 100).
double search_initial_sigma2(const TargetModel& target, const ChainState& state, double sigma2,
                             Rng& rng);

/// Unpreconditioned MALA; only sigma^2 adapts.
class SimpleMalaKernel : public Kernel {
 public:
  SimpleMalaKernel(Index dim, const StepOptions& options = {});

  StepDiagnostics step(ChainState& state, const TargetModel& target, Rng& rng) override;
  void freeze() override;
  Phase phase() const override { return frozen_ ? Phase::Frozen : Phase::Adapting; }
  std::string name() const override { return "MALA"; }
  double sigma2() const override { return controller_.sigma2(); }

  const StepSizeController& controller() const { return controller_; }

 private:
  StepSizeController controller_;
  bool frozen_ = false;
};

struct FisherMalaOptions {
  double lambda = 10.0;
  StepOptions step;
  long init_iters = 500;
  SignalMode signal = SignalMode::RaoBlackwell;
};

/**
 * Fisher-information adaptive MALA.
 *
 * Runs plain MALA for `init_iters` steps adapting only sigma^2, then learns
 * a square root R of the inverse Fisher matrix from score increments while
 * continuing to adapt sigma^2. Proposals use the trace-normalized step
 * sigma_R^2 = sigma^2 / (tr(R R^T) / d), so the overall scale of R never
 * matters. Each iteration costs O(d^2) plus one target evaluation.
 */
class FisherMalaKernel : public Kernel {
 public:
  FisherMalaKernel(Index dim, const FisherMalaOptions& options = {});

  StepDiagnostics step(ChainState& state, const TargetModel& target, Rng& rng) override;
  void freeze() override;
  Phase phase() const override { return phase_; }
  std::string name() const override;
  double sigma2() const override { return controller_.sigma2(); }
  std::optional<Matrix> preconditioner() const override;

  /// Replaces the learned square root (skipping the initialization phase).
  void set_sqrt(const Matrix& R);
  void set_sigma2(double sigma2);

  const Matrix& sqrt() const;
  double sqrt_trace() const;
  double sigma2_R() const { return sigma2_R_; }
  const StepSizeController& controller() const { return controller_; }
  const FisherMalaOptions& options() const { return options_; }
  long iteration() const { return iteration_; }

 private:
  void renormalize();

  FisherMalaOptions options_;
  StepSizeController controller_;
  SqrtPreconditioner precond_;
  PairedEstimator paired_;
  double sigma2_R_;
  Phase phase_;
  long iteration_ = 0;
};

struct AdaMalaOptions {
  double lambda = 10.0;
  StepOptions step;
  long init_iters = 500;
  long warmup_iters = 500;
};

/**
 * Preconditioned MALA whose preconditioner is the running empirical
 * covariance of visited states (Haario-style recursion):
 *
 *   mu_n = ((n-1)/n) mu_{n-1} + x_n / n,
 *   S_n  = ((n-2)/(n-1)) S_{n-1} + (x_n - mu_{n-1})(x_n - mu_{n-1})^T / n,
 *
 * seeded with S_2 = (x_2 - mu_1)(x_2 - mu_1)^T / 2 + lambda I. Plain MALA runs
 * for `init_iters` steps, then for `warmup_iters` more while the covariance
 * accumulates, after which proposals use the normalized covariance.
 * Each adapting step refactorizes S_n (O(d^3)).
 */
class AdaMalaKernel : public Kernel {
 public:
  AdaMalaKernel(Index dim, const AdaMalaOptions& options = {});

  StepDiagnostics step(ChainState& state, const TargetModel& target, Rng& rng) override;
  void freeze() override;
  Phase phase() const override { return phase_; }
  std::string name() const override { return "AdaMALA"; }
  double sigma2() const override { return controller_.sigma2(); }
  std::optional<Matrix> preconditioner() const override;

  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return cov_; }
  long count() const { return count_; }

 private:
  void accumulate(const Vector& x);
  void refactor();

  AdaMalaOptions options_;
  StepSizeController controller_;
  Vector mean_;
  Matrix cov_;
  Matrix chol_;
  double sigma2_A_ = 0.0;
  long count_ = 0;
  bool frozen_preconditioned_ = false;
  Phase phase_;
  long iteration_ = 0;
};

/// MALA preconditioned with the exact covariance of a Gaussian target (the
/// constant-metric case of manifold MALA). Only sigma^2 adapts.
class MmalaKernel : public Kernel {
 public:
  /// Throws UnsupportedTarget unless `target` is a GaussianTarget.
  MmalaKernel(const TargetModel& target, const StepOptions& options = {});

  StepDiagnostics step(ChainState& state, const TargetModel& target, Rng& rng) override;
  void freeze() override;
  Phase phase() const override { return frozen_ ? Phase::Frozen : Phase::Adapting; }
  std::string name() const override { return "mMALA"; }
  double sigma2() const override { return controller_.sigma2(); }
  std::optional<Matrix> preconditioner() const override;

  void set_sigma2(double sigma2) { controller_.set_sigma2(sigma2); }
  const Matrix& sqrt() const { return chol_; }

 private:
  StepSizeController controller_;
  Matrix chol_;
  double trace_;
  bool frozen_ = false;
};

struct HmcOptions {
  int leapfrog_steps = 10;
  double rho = 0.015;
  double target_rate = 0.651;
  /// Initial squared leapfrog step; <= 0 selects 2.38^2 / d.
  double sigma2_init = 0.0;
};

/// L leapfrog steps of size eps with identity mass. Updates position,
/// momentum and the cached log-density/gradient in place; `grad` on entry
/// must be the gradient at `x`. Performs exactly `steps` target evaluations.
void leapfrog(const TargetModel& target, Vector& x, Vector& p, double& logpi, Vector& grad,
              double eps, int steps);

/// Hamiltonian Monte Carlo with a fixed number of leapfrog steps and
/// identity mass matrix; eps = sqrt(sigma^2) is adapted with the same
/// multiplicative rule as MALA.
class HmcKernel : public Kernel {
 public:
  HmcKernel(Index dim, const HmcOptions& options = {});

  StepDiagnostics step(ChainState& state, const TargetModel& target, Rng& rng) override;
  void freeze() override;
  Phase phase() const override { return frozen_ ? Phase::Frozen : Phase::Adapting; }
  std::string name() const override { return "HMC"; }
  double sigma2() const override { return controller_.sigma2(); }

  void set_sigma2(double sigma2) { controller_.set_sigma2(sigma2); }
  int leapfrog_steps() const { return steps_; }

 private:
  StepSizeController controller_;
  int steps_;
  bool frozen_ = false;
};

}  // namespace fmala
