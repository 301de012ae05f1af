#pragma once

#include "fmala/types.hpp"

namespace fmala {

/**
 * Square root R of the damped inverse empirical Fisher matrix
 *
 *   A_n = (s_1 s_1^T + ... + s_n s_n^T + lambda I)^{-1},   R_n R_n^T = A_n,
 *
 * maintained with rank-one O(d^2) updates (Potter-style square-root
 * recursion). R is dense and not triangular.
 *
 * Before the first signal (count() == 0) R is the identity. The first call
 * to observe() applies the closed-form initialization, later calls the
 * rank-one update. A single instance must be updated from one thread at a
 * time.
 */
class SqrtPreconditioner {
 public:
  /// Identity square root with no signals yet. Throws InvalidParameter
  /// unless dim >= 1 and lambda > 0.
  SqrtPreconditioner(Index dim, double lambda);

  /// R_1 = (1/sqrt(lambda)) (I - r_1 s s^T / (lambda + s^T s)),
  /// r_1 = 1 / (1 + sqrt(lambda / (lambda + s^T s))).
  static SqrtPreconditioner initialize(const Vector& s1, double lambda);

  /// Wraps an existing square root, e.g. a Cholesky factor of a known
  /// covariance. `count` is the number of signals R is taken to summarize.
  static SqrtPreconditioner from_sqrt(Matrix sqrt, double lambda, long count = 1);

  /// Initializes on the first signal and applies update() afterwards.
  void observe(const Vector& s);

  /// phi = R^T s, R <- R - r (R phi) phi^T / (1 + phi^T phi),
  /// r = 1 / (1 + sqrt(1 / (1 + phi^T phi))). Requires count() >= 1.
  void update(const Vector& s);

  /// Stochastic-approximation step I_n = (1 - gamma) I_{n-1} + gamma s s^T
  /// carried out on the square root. gamma must lie in (0, 1).
  void update_general(const Vector& s, double gamma);

  const Matrix& sqrt() const { return sqrt_; }
  /// R R^T, formed explicitly; O(d^3).
  Matrix inverse_fisher() const;
  /// Cached tr(R R^T), refreshed after every update.
  double trace() const { return trace_; }
  double lambda() const { return lambda_; }
  long count() const { return count_; }
  Index dim() const { return sqrt_.rows(); }

 private:
  void refresh_trace() { trace_ = sqrt_.squaredNorm(); }

  Matrix sqrt_;
  double lambda_;
  long count_ = 0;
  double trace_;
  Vector phi_;
  Vector r_phi_;
};

/**
 * Centred variant: tracks the running mean of the signals and a square root
 * of the damped inverse empirical covariance
 *
 *   A_n = ( (1/(n-1)) sum_i (s_i - mean_n)(s_i - mean_n)^T + (lambda/(n-1)) I )^{-1}.
 *
 * The first signal only seeds the mean; R stays the identity until n = 2.
 */
class PairedEstimator {
 public:
  PairedEstimator(Index dim, double lambda);

  void update(const Vector& s);

  const Matrix& sqrt() const { return sqrt_; }
  Matrix inverse_fisher() const;
  const Vector& mean() const { return mean_; }
  double trace() const { return trace_; }
  double lambda() const { return lambda_; }
  long count() const { return count_; }
  Index dim() const { return sqrt_.rows(); }

 private:
  Matrix sqrt_;
  Vector mean_;
  double lambda_;
  long count_ = 0;
  double trace_;
};

/// Sherman-Morrison step A - (A s s^T A) / (1 + s^T A s), i.e. (A^{-1} + s s^T)^{-1}.
Matrix woodbury_update(const Matrix& A, const Vector& s);

/// B / (tr(B) / d): the matrix rescaled to average eigenvalue one.
/// Throws InvalidParameter when tr(B) <= 0.
Matrix normalized_matrix(const Matrix& B);

}  // namespace fmala
