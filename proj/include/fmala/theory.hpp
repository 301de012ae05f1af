#pragma once

#include <string>
#include <vector>

#include "fmala/targets.hpp"

namespace fmala::theory {

/// Expected squared jumped distance of one Euler-Maruyama Langevin step
///   x' - x = (delta/2) A grad log pi(x) + sqrt(A) N(0, delta I)
/// at stationarity, for preconditioners A constrained to tr(A) = trace_budget.
struct EsjdProblem {
  Matrix fisher;
  double delta = 1.0;
  double trace_budget = 1.0;

  /// Throws InvalidParameter unless fisher is SPD and delta, trace_budget > 0.
  void validate() const;
};

/// (delta^2/4) A I A + delta A: the stationary second moment of the jump.
Matrix jump_covariance(const Matrix& fisher, const Matrix& A, double delta);

/// J(A) = tr((delta^2/4) A I A + delta A). Throws InvalidParameter if A is
/// not symmetric positive definite.
double esjd_objective(const EsjdProblem& p, const Matrix& A);

/// k I^{-1} with k = c / sum_i (1 / mu_i), mu_i the eigenvalues of I.
/// The result has trace c.
Matrix optimal_preconditioner(const EsjdProblem& p);

struct JumpMoments {
  Matrix second_moment;
  /// Entrywise Monte Carlo standard error of second_moment.
  Matrix standard_error;
  Vector mean;
  Vector mean_standard_error;
  long samples = 0;
};

/// Monte Carlo estimate of E[(x' - x)(x' - x)^T] with x drawn exactly from
/// the Gaussian target and x' one discretized Langevin step away.
/// Requires n_samples >= 10^4.
JumpMoments jump_covariance_mc(const GaussianTarget& target, const Matrix& A, double delta,
                               long n_samples, Rng& rng);

struct GridExtrema {
  Vector argmax;
  double max_value = 0.0;
  Vector argmin;
  double min_value = 0.0;
  long evaluated = 0;
};

/// Exhaustive search over diagonal A = diag(a) with a_i > 0 on a grid of
/// spacing `step` and sum(a) = trace_budget. Dimension 2 or 3 only.
GridExtrema diagonal_grid_search(const EsjdProblem& p, double step);

/// Random SPD matrix with a Haar-distributed eigenbasis and the given trace.
Matrix random_spd_with_trace(Index dim, double trace, Rng& rng);

/// Compares J(optimal_preconditioner(p)) against J(A) for `candidates`
/// random SPD A with the same trace.
struct DominanceCounts {
  long candidates = 0;
  /// Candidates with J(A) > J(A*).
  long above_optimum = 0;
  /// Candidates with J(A) < J(A*).
  long below_optimum = 0;
  /// max over candidates of J(A) - J(A*).
  double max_excess = 0.0;
  /// min over candidates of J(A) - J(A*).
  double min_excess = 0.0;
};
DominanceCounts dominance_check(const EsjdProblem& p, long candidates, Rng& rng);

/// Random SPD "Fisher" matrix with log-normal spectrum.
Matrix random_fisher(Index dim, Rng& rng);

struct TheoryCheck {
  std::string name;
  bool holds = false;
  std::string detail;
};

struct VerificationOptions {
  Index dim = 4;
  long mc_samples = 1'000'000;
  long fishers = 100;
  long candidates = 1000;
  std::uint64_t seed = 2023;
};

/// Runs the full numerical check-list: jump covariance formula by Monte
/// Carlo, the trace-constrained extremum of J (grid and random search), the
/// eigenstructure of A*, and its scale law.
std::vector<TheoryCheck> verify_theory(const VerificationOptions& options);

}  // namespace fmala::theory
