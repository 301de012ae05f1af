#include "fmala/preconditioner.hpp"

#include <cmath>
#include <string>

namespace fmala {
namespace {

void require_finite(const Vector& s, const char* what) {
  if (!s.allFinite()) {
    throw InvalidSignal(std::string(what) + ": signal has non-finite entries");
  }
}

void require_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidParameter("damping lambda must be positive and finite, got " +
                           std::to_string(lambda));
  }
}

// In-place R <- scale * (R - r (R phi) phi^T / (c + phi^T phi)), with
// r = 1 / (1 + sqrt(c / (c + phi^T phi))). This is R (I - r z z^T) for
// z = phi / sqrt(c + phi^T phi), the square-root form of the rank-one
// downdate I - z z^T.
void rank_one_sqrt_step(Matrix& R, const Vector& phi, Vector& r_phi, double c,
                        double scale) {
  const double pp = phi.squaredNorm();
  const double denom = c + pp;
  const double r = 1.0 / (1.0 + std::sqrt(c / denom));
  r_phi.noalias() = R * phi;
  R.noalias() -= (r / denom) * r_phi * phi.transpose();
  if (scale != 1.0) R *= scale;
}

}  // namespace

SqrtPreconditioner::SqrtPreconditioner(Index dim, double lambda)
    : lambda_(lambda), trace_(static_cast<double>(dim)) {
  if (dim < 1) throw InvalidParameter("preconditioner dimension must be >= 1");
  require_lambda(lambda);
  sqrt_ = Matrix::Identity(dim, dim);
  phi_.resize(dim);
  r_phi_.resize(dim);
}

SqrtPreconditioner SqrtPreconditioner::initialize(const Vector& s1, double lambda) {
  require_lambda(lambda);
  require_finite(s1, "sqrt_init");
  SqrtPreconditioner p(s1.size(), lambda);
  const double ss = s1.squaredNorm();
  const double denom = lambda + ss;
  const double r1 = 1.0 / (1.0 + std::sqrt(lambda / denom));
  p.sqrt_.noalias() -= (r1 / denom) * s1 * s1.transpose();
  p.sqrt_ /= std::sqrt(lambda);
  p.count_ = 1;
  p.refresh_trace();
  return p;
}

SqrtPreconditioner SqrtPreconditioner::from_sqrt(Matrix sqrt, double lambda, long count) {
  if (sqrt.rows() != sqrt.cols() || sqrt.rows() < 1) {
    throw InvalidParameter("square root must be a non-empty square matrix");
  }
  if (!sqrt.allFinite()) throw InvalidParameter("square root has non-finite entries");
  SqrtPreconditioner p(sqrt.rows(), lambda);
  p.sqrt_ = std::move(sqrt);
  p.count_ = count;
  p.refresh_trace();
  return p;
}

void SqrtPreconditioner::observe(const Vector& s) {
  if (count_ == 0) {
    *this = initialize(s, lambda_);
  } else {
    update(s);
  }
}

void SqrtPreconditioner::update(const Vector& s) {
  require_finite(s, "sqrt_update");
  if (count_ < 1) throw std::logic_error("sqrt_update before initialization");
  if (s.size() != dim()) throw InvalidParameter("signal dimension mismatch");
  phi_.noalias() = sqrt_.transpose() * s;
  rank_one_sqrt_step(sqrt_, phi_, r_phi_, 1.0, 1.0);
  ++count_;
  refresh_trace();
}

void SqrtPreconditioner::update_general(const Vector& s, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw InvalidParameter("learning rate gamma must lie in (0, 1), got " +
                           std::to_string(gamma));
  }
  require_finite(s, "sqrt_update_general");
  if (count_ < 1) throw std::logic_error("sqrt_update_general before initialization");
  if (s.size() != dim()) throw InvalidParameter("signal dimension mismatch");
  phi_.noalias() = sqrt_.transpose() * s;
  rank_one_sqrt_step(sqrt_, phi_, r_phi_, (1.0 - gamma) / gamma,
                     1.0 / std::sqrt(1.0 - gamma));
  ++count_;
  refresh_trace();
}

Matrix SqrtPreconditioner::inverse_fisher() const {
  return sqrt_ * sqrt_.transpose();
}

PairedEstimator::PairedEstimator(Index dim, double lambda)
    : mean_(Vector::Zero(dim)), lambda_(lambda), trace_(static_cast<double>(dim)) {
  if (dim < 1) throw InvalidParameter("estimator dimension must be >= 1");
  require_lambda(lambda);
  sqrt_ = Matrix::Identity(dim, dim);
}

void PairedEstimator::update(const Vector& s) {
  require_finite(s, "paired_update");
  if (s.size() != dim()) throw InvalidParameter("signal dimension mismatch");
  const long n = ++count_;
  if (n == 1) {
    mean_ = s;
    return;
  }
  const double nd = static_cast<double>(n);
  // lambda_{n-1}: the damping parameter itself at n = 2, (n-2)/(n-1) after.
  const double lam_prev = (n == 2) ? lambda_ : (nd - 2.0) / (nd - 1.0);
  const Vector delta = s - mean_;
  const Vector phi = sqrt_.transpose() * delta;
  Vector r_phi(dim());
  rank_one_sqrt_step(sqrt_, phi, r_phi, nd * lam_prev, 1.0 / std::sqrt(lam_prev));
  mean_ += delta / nd;
  trace_ = sqrt_.squaredNorm();
}

Matrix PairedEstimator::inverse_fisher() const {
  return sqrt_ * sqrt_.transpose();
}

Matrix woodbury_update(const Matrix& A, const Vector& s) {
  const Vector As = A * s;
  return A - (As * As.transpose()) / (1.0 + s.dot(As));
}

Matrix normalized_matrix(const Matrix& B) {
  const double tr = B.trace();
  if (!(tr > 0.0)) {
    throw InvalidParameter("normalized_matrix requires a positive trace");
  }
  return B / (tr / static_cast<double>(B.rows()));
}

}  // namespace fmala
