#pragma once

#include <string>
#include <vector>

#include "fmala/types.hpp"

namespace fmala {

/// Per-coordinate effective sample size of one chain.
struct EssReport {
  std::vector<double> per_dim;
  /// Coordinates whose samples were all identical (ESS set to N).
  std::vector<bool> degenerate;
  double max = 0.0;
  double median = 0.0;
  double min = 0.0;
  long samples = 0;
};

/// Normalized autocorrelations rho_0 = 1, rho_1, ..., rho_{N-1} using the
/// biased (1/N) autocovariance, computed by FFT in O(N log N).
std::vector<double> autocorrelation(const Eigen::Ref<const Vector>& series);

/// N / (1 + 2 sum_k rho_k), with the sum truncated by Geyer's initial
/// positive sequence rule. The result is capped at N log10(N).
double effective_sample_size(const Eigen::Ref<const Vector>& series, bool* degenerate = nullptr);

/// ESS of every column of an N x d chain. Requires N >= 100.
EssReport ess(const Matrix& chain);

/// Midpoint median; the input need not be sorted.
double median(std::vector<double> values);

/// || A / (tr A / d) - S / (tr S / d) ||_F.
double frobenius_distance(const Matrix& A, const Matrix& Sigma);

struct MeanStd {
  double mean = 0.0;
  /// Sample standard deviation (n - 1 denominator).
  double std = 0.0;
};

struct ReplicateSummary {
  MeanStd max;
  MeanStd median;
  MeanStd min;
  long replicates = 0;
};

/// Mean and sample standard deviation of max / median / min ESS across
/// replicates. Requires at least two reports.
ReplicateSummary aggregate_replicates(const std::vector<EssReport>& reports);

MeanStd mean_std(const std::vector<double>& values);

/// "1923.753 ± 95.820".
std::string format_mean_std(const MeanStd& v);

/// Adaptation trace recorded during burn-in.
struct AdaptationTrace {
  std::vector<long> iteration;
  /// Empty when the target has no known covariance.
  std::vector<double> frobenius_norm;
  std::vector<double> log_target;
  std::vector<double> running_acceptance;

  bool has_frobenius() const { return !frobenius_norm.empty(); }
  std::size_t size() const { return iteration.size(); }
};

}  // namespace fmala
