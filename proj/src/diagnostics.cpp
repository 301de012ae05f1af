#include "fmala/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numeric>

#include <unsupported/Eigen/FFT>

namespace fmala {

std::vector<double> autocorrelation(const Eigen::Ref<const Vector>& series) {
  const std::size_t n = static_cast<std::size_t>(series.size());
  std::size_t m = 1;
  while (m < 2 * n) m <<= 1;
  std::vector<double> padded(m, 0.0);
  const double mu = series.mean();
  for (std::size_t i = 0; i < n; ++i) padded[i] = series[static_cast<Index>(i)] - mu;

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, padded);
  for (auto& f : freq) f = std::norm(f);
  std::vector<double> acov;
  fft.inv(acov, freq);

  std::vector<double> rho(n, 0.0);
  if (n == 0 || acov[0] <= 0.0) return rho;
  for (std::size_t k = 0; k < n; ++k) rho[k] = acov[k] / acov[0];
  return rho;
}

double effective_sample_size(const Eigen::Ref<const Vector>& series, bool* degenerate) {
  const Index n = series.size();
  const double nd = static_cast<double>(n);
  const bool constant = n == 0 || series.maxCoeff() == series.minCoeff();
  if (degenerate != nullptr) *degenerate = constant;
  if (constant) return nd;

  const std::vector<double> rho = autocorrelation(series);
  double tau = -1.0;
  for (std::size_t m = 0; 2 * m + 1 < rho.size(); ++m) {
    const double pair = rho[2 * m] + rho[2 * m + 1];
    if (pair < 0.0) break;
    tau += 2.0 * pair;
  }
  const double cap = nd * std::log10(nd);
  if (!(tau > 0.0)) return cap;
  return std::min(nd / tau, cap);
}

EssReport ess(const Matrix& chain) {
  if (chain.rows() < 100) throw InvalidParameter("ESS needs at least 100 samples");
  if (chain.cols() < 1) throw InvalidParameter("ESS needs at least one coordinate");
  EssReport r;
  r.samples = chain.rows();
  r.per_dim.resize(static_cast<std::size_t>(chain.cols()));
  r.degenerate.resize(static_cast<std::size_t>(chain.cols()));
  for (Index j = 0; j < chain.cols(); ++j) {
    bool flag = false;
    r.per_dim[static_cast<std::size_t>(j)] = effective_sample_size(chain.col(j), &flag);
    r.degenerate[static_cast<std::size_t>(j)] = flag;
  }
  r.max = *std::max_element(r.per_dim.begin(), r.per_dim.end());
  r.min = *std::min_element(r.per_dim.begin(), r.per_dim.end());
  r.median = median(r.per_dim);
  return r;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidParameter("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double frobenius_distance(const Matrix& A, const Matrix& Sigma) {
  if (A.rows() != Sigma.rows() || A.cols() != Sigma.cols()) {
    throw InvalidParameter("frobenius_distance: size mismatch");
  }
  const double d = static_cast<double>(A.rows());
  const double ta = A.trace();
  const double ts = Sigma.trace();
  if (!(ta > 0.0) || !(ts > 0.0)) throw InvalidParameter("frobenius_distance: non-positive trace");
  return (A / (ta / d) - Sigma / (ts / d)).norm();
}

MeanStd mean_std(const std::vector<double>& values) {
  if (values.size() < 2) throw InvalidParameter("mean and sample std need at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

ReplicateSummary aggregate_replicates(const std::vector<EssReport>& reports) {
  if (reports.size() < 2) throw InvalidParameter("aggregation needs at least two replicates");
  std::vector<double> mx, md, mn;
  for (const auto& r : reports) {
    mx.push_back(r.max);
    md.push_back(r.median);
    mn.push_back(r.min);
  }
  return {mean_std(mx), mean_std(md), mean_std(mn), static_cast<long>(reports.size())};
}

std::string format_mean_std(const MeanStd& v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.3f \xC2\xB1 %.3f", v.mean, v.std);
  return buf;
}

}  // namespace fmala
