#include <algorithm>
#include <cmath>
#include <sstream>

#include "fmala/samplers.hpp"

namespace fmala {
namespace {

double initial_sigma2(const StepOptions& o, Index dim) {
  return o.sigma2_init > 0.0 ? o.sigma2_init : default_sigma2(dim);
}

void commit(ChainState& state, MalaTransition& t) {
  if (t.accepted) state = std::move(t.candidate);
}

}  // namespace

SimpleMalaKernel::SimpleMalaKernel(Index dim, const StepOptions& options)
    : controller_(initial_sigma2(options, dim), options.target_rate, options.rho) {}

StepDiagnostics SimpleMalaKernel::step(ChainState& state, const TargetModel& target, Rng& rng) {
  MalaTransition t = mala_transition(state, target, nullptr, controller_.sigma2(), rng);
  if (!frozen_) controller_.adapt(t.alpha);
  if (t.anomaly) ++anomalies_;
  commit(state, t);
  return {t.alpha, t.accepted, t.anomaly};
}

void SimpleMalaKernel::freeze() {
  frozen_ = true;
  controller_.set_adapting(false);
}

// FisherMALA

FisherMalaKernel::FisherMalaKernel(Index dim, const FisherMalaOptions& options)
    : options_(options),
      controller_(initial_sigma2(options.step, dim), options.step.target_rate, options.step.rho),
      precond_(dim, options.lambda),
      paired_(dim, options.lambda),
      sigma2_R_(controller_.sigma2()),
      phase_(options.init_iters > 0 ? Phase::InitMala : Phase::Adapting) {
  if (options.init_iters < 0) throw InvalidParameter("init_iters must be >= 0");
}

std::string FisherMalaKernel::name() const {
  switch (options_.signal) {
    case SignalMode::RaoBlackwell: return "FisherMALA";
    case SignalMode::NoRaoBlackwell: return "FisherMALA-no-RB";
    case SignalMode::Paired: return "FisherMALA-paired-est";
  }
  return "FisherMALA";
}

const Matrix& FisherMalaKernel::sqrt() const {
  return options_.signal == SignalMode::Paired ? paired_.sqrt() : precond_.sqrt();
}

double FisherMalaKernel::sqrt_trace() const {
  return options_.signal == SignalMode::Paired ? paired_.trace() : precond_.trace();
}

void FisherMalaKernel::renormalize() {
  sigma2_R_ = controller_.sigma2() / (sqrt_trace() / static_cast<double>(sqrt().rows()));
}

StepDiagnostics FisherMalaKernel::step(ChainState& state, const TargetModel& target, Rng& rng) {
  if (phase_ == Phase::InitMala) {
    MalaTransition t = mala_transition(state, target, nullptr, controller_.sigma2(), rng);
    controller_.adapt(t.alpha);
    if (++iteration_ >= options_.init_iters) phase_ = Phase::Adapting;
    renormalize();
    if (t.anomaly) ++anomalies_;
    commit(state, t);
    return {t.alpha, t.accepted, t.anomaly};
  }

  MalaTransition t = mala_transition(state, target, &sqrt(), sigma2_R_, rng);
  if (phase_ == Phase::Adapting) {
    switch (options_.signal) {
      case SignalMode::RaoBlackwell:
        if (t.anomaly) {
          precond_.observe(Vector::Zero(state.x.size()));
        } else {
          precond_.observe(std::sqrt(t.alpha) * (t.candidate.grad - state.grad));
        }
        break;
      case SignalMode::NoRaoBlackwell:
        if (t.accepted) {
          precond_.observe(t.candidate.grad - state.grad);
        } else {
          precond_.observe(Vector::Zero(state.x.size()));
        }
        break;
      case SignalMode::Paired:
        paired_.update(state.grad);
        break;
    }
    controller_.adapt(t.alpha);
    renormalize();
    ++iteration_;
  }
  if (t.anomaly) ++anomalies_;
  commit(state, t);
  return {t.alpha, t.accepted, t.anomaly};
}

void FisherMalaKernel::freeze() {
  phase_ = Phase::Frozen;
  controller_.set_adapting(false);
  renormalize();
}

std::optional<Matrix> FisherMalaKernel::preconditioner() const {
  return sqrt() * sqrt().transpose();
}

void FisherMalaKernel::set_sqrt(const Matrix& R) {
  if (options_.signal == SignalMode::Paired) {
    throw std::logic_error("set_sqrt is not available for the paired estimator");
  }
  precond_ = SqrtPreconditioner::from_sqrt(R, options_.lambda, std::max(1L, precond_.count()));
  if (phase_ == Phase::InitMala) phase_ = Phase::Adapting;
  renormalize();
}

void FisherMalaKernel::set_sigma2(double sigma2) {
  controller_.set_sigma2(sigma2);
  renormalize();
}

// AdaMALA

AdaMalaKernel::AdaMalaKernel(Index dim, const AdaMalaOptions& options)
    : options_(options),
      controller_(initial_sigma2(options.step, dim), options.step.target_rate, options.step.rho),
      mean_(Vector::Zero(dim)),
      cov_(Matrix::Identity(dim, dim)),
      chol_(Matrix::Identity(dim, dim)),
      phase_(options.init_iters > 0 ? Phase::InitMala : Phase::Warmup) {
  if (!(options.lambda > 0.0)) throw InvalidParameter("damping lambda must be positive");
  if (options.init_iters < 0) throw InvalidParameter("init_iters must be >= 0");
  if (options.warmup_iters < 2) throw InvalidParameter("warmup_iters must be >= 2");
}

void AdaMalaKernel::accumulate(const Vector& x) {
  const long n = ++count_;
  if (n == 1) {
    mean_ = x;
    return;
  }
  const double nd = static_cast<double>(n);
  const Vector delta = x - mean_;
  if (n == 2) {
    cov_ = 0.5 * delta * delta.transpose();
    cov_.diagonal().array() += options_.lambda;
  } else {
    cov_ *= (nd - 2.0) / (nd - 1.0);
    cov_.noalias() += (1.0 / nd) * delta * delta.transpose();
  }
  mean_ += delta / nd;
}

void AdaMalaKernel::refactor() {
  auto factored = [](const Eigen::LLT<Matrix>& llt) {
    return llt.info() == Eigen::Success && llt.matrixLLT().allFinite();
  };
  Eigen::LLT<Matrix> llt(cov_);
  if (!factored(llt)) {
    Matrix jittered = cov_;
    jittered.diagonal().array() += options_.lambda * 1e-6;
    llt.compute(jittered);
    if (!factored(llt)) {
      std::ostringstream dump;
      dump << "AdaMALA covariance factorization failed after jitter\n"
           << "count: " << count_ << "\nsigma2: " << controller_.sigma2()
           << "\nmean: " << mean_.transpose() << "\ncovariance diagonal: "
           << cov_.diagonal().transpose() << "\n";
      throw NumericalAbort("AdaMALA: Cholesky of the empirical covariance failed", dump.str());
    }
  }
  chol_ = llt.matrixL();
}

StepDiagnostics AdaMalaKernel::step(ChainState& state, const TargetModel& target, Rng& rng) {
  const double d = static_cast<double>(state.x.size());
  MalaTransition t;
  switch (phase_) {
    case Phase::InitMala:
      t = mala_transition(state, target, nullptr, controller_.sigma2(), rng);
      controller_.adapt(t.alpha);
      if (++iteration_ >= options_.init_iters) phase_ = Phase::Warmup;
      break;
    case Phase::Warmup:
      accumulate(state.x);
      t = mala_transition(state, target, nullptr, controller_.sigma2(), rng);
      controller_.adapt(t.alpha);
      if (++iteration_ >= options_.init_iters + options_.warmup_iters) {
        refactor();
        phase_ = Phase::Adapting;
      }
      break;
    case Phase::Adapting:
      accumulate(state.x);
      refactor();
      sigma2_A_ = controller_.sigma2() / (chol_.squaredNorm() / d);
      t = mala_transition(state, target, &chol_, sigma2_A_, rng);
      controller_.adapt(t.alpha);
      ++iteration_;
      break;
    case Phase::Frozen:
      if (frozen_preconditioned_) {
        t = mala_transition(state, target, &chol_, sigma2_A_, rng);
      } else {
        t = mala_transition(state, target, nullptr, controller_.sigma2(), rng);
      }
      break;
  }
  if (t.anomaly) ++anomalies_;
  commit(state, t);
  return {t.alpha, t.accepted, t.anomaly};
}

void AdaMalaKernel::freeze() {
  if (phase_ == Phase::Frozen) return;
  frozen_preconditioned_ = phase_ == Phase::Adapting || (phase_ == Phase::Warmup && count_ >= 2);
  if (phase_ == Phase::Warmup && frozen_preconditioned_) refactor();
  phase_ = Phase::Frozen;
  controller_.set_adapting(false);
  if (frozen_preconditioned_) {
    sigma2_A_ = controller_.sigma2() / (chol_.squaredNorm() / static_cast<double>(chol_.rows()));
  }
}

std::optional<Matrix> AdaMalaKernel::preconditioner() const {
  if (phase_ == Phase::InitMala || phase_ == Phase::Warmup) return std::nullopt;
  if (phase_ == Phase::Frozen && !frozen_preconditioned_) return std::nullopt;
  return chol_ * chol_.transpose();
}

// mMALA

namespace {

const GaussianTarget& require_gaussian(const TargetModel& target) {
  const auto* g = dynamic_cast<const GaussianTarget*>(&target);
  if (g == nullptr) {
    throw UnsupportedTarget("mMALA with a constant metric requires a Gaussian target, got '" +
                            target.name() + "'");
  }
  return *g;
}

}  // namespace

MmalaKernel::MmalaKernel(const TargetModel& target, const StepOptions& options)
    : controller_(initial_sigma2(options, target.dim()), options.target_rate, options.rho),
      chol_(require_gaussian(target).cholesky_factor()),
      trace_(chol_.squaredNorm()) {}

StepDiagnostics MmalaKernel::step(ChainState& state, const TargetModel& target, Rng& rng) {
  if (target.dim() != chol_.rows()) throw InvalidParameter("mMALA target dimension changed");
  const double sigma2_A = controller_.sigma2() / (trace_ / static_cast<double>(chol_.rows()));
  MalaTransition t = mala_transition(state, target, &chol_, sigma2_A, rng);
  if (!frozen_) controller_.adapt(t.alpha);
  if (t.anomaly) ++anomalies_;
  commit(state, t);
  return {t.alpha, t.accepted, t.anomaly};
}

void MmalaKernel::freeze() {
  frozen_ = true;
  controller_.set_adapting(false);
}

std::optional<Matrix> MmalaKernel::preconditioner() const {
  return chol_ * chol_.transpose();
}

// HMC

HmcKernel::HmcKernel(Index dim, const HmcOptions& options)
    : controller_(options.sigma2_init > 0.0 ? options.sigma2_init : default_sigma2(dim),
                  options.target_rate, options.rho),
      steps_(options.leapfrog_steps) {
  if (steps_ < 1) throw InvalidParameter("leapfrog_steps must be >= 1");
}

StepDiagnostics HmcKernel::step(ChainState& state, const TargetModel& target, Rng& rng) {
  const Index d = state.x.size();
  Vector p = standard_normal(rng, d);
  const double u = uniform01(rng);
  const double h0 = -state.logpi + 0.5 * p.squaredNorm();

  ChainState next = state;
  leapfrog(target, next.x, p, next.logpi, next.grad, std::sqrt(controller_.sigma2()), steps_);
  const double h1 = -next.logpi + 0.5 * p.squaredNorm();

  StepDiagnostics diag;
  if (!std::isfinite(h1) || !next.grad.allFinite()) {
    diag.anomaly = true;
    ++anomalies_;
  } else {
    diag.alpha = std::exp(std::min(0.0, h0 - h1));
  }
  diag.accepted = u < diag.alpha;
  if (!frozen_) controller_.adapt(diag.alpha);
  if (diag.accepted) state = std::move(next);
  return diag;
}

void HmcKernel::freeze() {
  frozen_ = true;
  controller_.set_adapting(false);
}

}  // namespace fmala
