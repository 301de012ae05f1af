#include <algorithm>
#include <cmath>
#include <limits>

#include "fmala/samplers.hpp"

namespace fmala {

ChainState ChainState::at(const TargetModel& target, Vector x) {
  ChainState s;
  s.grad.resize(target.dim());
  s.logpi = target.evaluate(x, s.grad);
  s.x = std::move(x);
  return s;
}

StepSizeController::StepSizeController(double sigma2, double target_rate, double rho)
    : sigma2_(sigma2), rho_(rho), target_rate_(target_rate) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw InvalidParameter("step size sigma^2 must be positive and finite");
  }
  if (!(rho > 0.0 && rho < 1.0)) throw InvalidParameter("adaptation rate rho must lie in (0, 1)");
  if (!(target_rate > 0.0 && target_rate < 1.0)) {
    throw InvalidParameter("target acceptance rate must lie in (0, 1)");
  }
}

void StepSizeController::adapt(double alpha) {
  if (!adapting_) throw std::logic_error("step size adaptation while frozen");
  sigma2_ *= 1.0 + rho_ * (alpha - target_rate_);
}

void StepSizeController::set_sigma2(double sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw InvalidParameter("step size sigma^2 must be positive and finite");
  }
  sigma2_ = sigma2;
}

Vector mala_propose(const ChainState& state, const Matrix& R, double sigma2_R,
                    const Vector& noise) {
  const Vector drift = R * (R.transpose() * state.grad);
  return state.x + (0.5 * sigma2_R) * drift + std::sqrt(sigma2_R) * (R * noise);
}

double h_term(const Vector& z, const Vector& v, const Vector& grad_v, const Vector& A_grad_v,
              double sigma2) {
  return 0.5 * (z - v - (0.25 * sigma2) * A_grad_v).dot(grad_v);
}

MalaTransition mala_transition(const ChainState& state, const TargetModel& target,
                               const Matrix* R, double sigma2_R, Rng& rng) {
  const Index d = state.x.size();
  const Vector noise = standard_normal(rng, d);
  const double u = uniform01(rng);

  Vector a_grad_x;
  MalaTransition t;
  if (R != nullptr) {
    a_grad_x.noalias() = *R * (R->transpose() * state.grad);
    t.candidate.x = state.x + (0.5 * sigma2_R) * a_grad_x;
    t.candidate.x.noalias() += std::sqrt(sigma2_R) * (*R * noise);
  } else {
    a_grad_x = state.grad;
    t.candidate.x = state.x + (0.5 * sigma2_R) * a_grad_x + std::sqrt(sigma2_R) * noise;
  }
  t.candidate.grad.resize(d);
  t.candidate.logpi = target.evaluate(t.candidate.x, t.candidate.grad);

  if (!std::isfinite(t.candidate.logpi) || !t.candidate.grad.allFinite()) {
    t.anomaly = true;
    t.log_ratio = -std::numeric_limits<double>::infinity();
    t.alpha = 0.0;
    t.accepted = false;
    return t;
  }
  Vector a_grad_y;
  if (R != nullptr) {
    a_grad_y.noalias() = *R * (R->transpose() * t.candidate.grad);
  } else {
    a_grad_y = t.candidate.grad;
  }
  t.log_ratio = t.candidate.logpi +
                h_term(state.x, t.candidate.x, t.candidate.grad, a_grad_y, sigma2_R) -
                state.logpi - h_term(t.candidate.x, state.x, state.grad, a_grad_x, sigma2_R);
  if (std::isnan(t.log_ratio)) {
    t.anomaly = true;
    t.alpha = 0.0;
  } else {
    t.alpha = std::exp(std::min(0.0, t.log_ratio));
  }
  t.accepted = u < t.alpha;
  return t;
}

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::InitMala: return "init_mala";
    case Phase::Warmup: return "warmup";
    case Phase::Adapting: return "adapting";
    case Phase::Frozen: return "frozen";
  }
  return "unknown";
}

const char* to_string(SignalMode mode) {
  switch (mode) {
    case SignalMode::RaoBlackwell: return "rb";
    case SignalMode::NoRaoBlackwell: return "no_rb";
    case SignalMode::Paired: return "paired";
  }
  return "unknown";
}

SignalMode signal_mode_from_string(const std::string& s) {
  if (s == "rb") return SignalMode::RaoBlackwell;
  if (s == "no_rb") return SignalMode::NoRaoBlackwell;
  if (s == "paired") return SignalMode::Paired;
  throw InvalidParameter("unknown signal mode '" + s + "' (expected rb, no_rb or paired)");
}

double default_sigma2(Index dim) {
  return 2.38 * 2.38 / static_cast<double>(dim);
}

double search_initial_sigma2(const TargetModel& target, const ChainState& state, double sigma2,
                             Rng& rng) {
  if (!(sigma2 > 0.0)) throw InvalidParameter("sigma2 must be positive");
  const Index d = state.x.size();
  const Vector noise = standard_normal(rng, d);
  const double half = std::log(0.5);
  auto log_alpha = [&](double s2) {
    ChainState y;
    y.x = state.x + (0.5 * s2) * state.grad + std::sqrt(s2) * noise;
    y.grad.resize(d);
    y.logpi = target.evaluate(y.x, y.grad);
    if (!std::isfinite(y.logpi) || !y.grad.allFinite()) return -std::numeric_limits<double>::infinity();
    const double r = y.logpi + h_term(state.x, y.x, y.grad, y.grad, s2) - state.logpi -
                     h_term(y.x, state.x, state.grad, state.grad, s2);
    return std::isnan(r) ? -std::numeric_limits<double>::infinity() : std::min(0.0, r);
  };
  const bool grow = log_alpha(sigma2) > half;
  for (int i = 0; i < 100; ++i) {
    sigma2 = grow ? 2.0 * sigma2 : 0.5 * sigma2;
    const double la = log_alpha(sigma2);
    if (grow ? la < half : la > half) break;
  }
  return sigma2;
}

void leapfrog(const TargetModel& target, Vector& x, Vector& p, double& logpi, Vector& grad,
              double eps, int steps) {
  for (int i = 0; i < steps; ++i) {
    p += (0.5 * eps) * grad;
    x += eps * p;
    logpi = target.evaluate(x, grad);
    p += (0.5 * eps) * grad;
  }
}

}  // namespace fmala
