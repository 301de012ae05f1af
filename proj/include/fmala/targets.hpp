#pragma once

#include <optional>
#include <string>
#include <variant>

#include "fmala/types.hpp"

namespace fmala {

/**
 * Unnormalized log-density with gradient on R^d.
 *
 * Implementations are immutable after construction, so one instance can be
 * evaluated concurrently by any number of chains.
 */
class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual Index dim() const = 0;
  virtual std::string name() const = 0;

  /// Returns log pi(x) up to a constant and writes grad log pi(x) to `grad`.
  virtual double evaluate(const Vector& x, Vector& grad) const = 0;

  virtual double log_density(const Vector& x) const;
  virtual Vector grad_log_density(const Vector& x) const;
};

/// N(mean, covariance). The Fisher matrix of this target is the precision,
/// so its inverse (the covariance) is the ideal preconditioner.
class GaussianTarget : public TargetModel {
 public:
  /// Throws InvalidParameter if the covariance is not symmetric (1e-12
  /// relative) or not positive definite.
  GaussianTarget(Vector mean, Matrix covariance, std::string name = "gaussian");

  Index dim() const override { return mean_.size(); }
  std::string name() const override { return name_; }
  double evaluate(const Vector& x, Vector& grad) const override;

  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return cov_; }
  const Matrix& precision() const { return precision_; }
  /// Lower Cholesky factor L with L L^T = covariance.
  const Matrix& cholesky_factor() const { return chol_; }

  /// Exact draw from the target.
  Vector sample(Rng& rng) const;

 private:
  Vector mean_;
  Matrix cov_;
  Matrix chol_;
  Matrix precision_;
  std::string name_;
};

/// Standard normal in `dim` dimensions.
GaussianTarget standard_normal_target(Index dim);

/// 2-D Gaussian with unit variances and correlation 0.995, mean (1, 1).
GaussianTarget gaussian_2d_correlated();

/// Gaussian whose covariance is a linear times squared-exponential kernel
/// on a regular grid over [1, 2] plus 0.001 white noise:
///   S_ij = s_i s_j exp(-0.5 (s_i - s_j)^2 / 0.09) + 0.001 [i == j].
GaussianTarget gaussian_gp_target(Index dim = 100);

/// Diagonal Gaussian with standard deviations i/100, i = 1..100. For
/// dim != 100 the grid becomes i/dim and the name says so.
GaussianTarget gaussian_inhomogeneous(Index dim = 100);

/**
 * Bayesian logistic regression posterior with a N(0, I) prior:
 *
 *   log pi(theta) = sum_i [y_i log s(theta^T z_i) + (1 - y_i) log(1 - s(theta^T z_i))]
 *                   - theta^T theta / 2.
 */
class LogisticRegressionTarget : public TargetModel {
 public:
  /// `inputs` is m x d with rows z_i; labels must be exactly 0 or 1.
  LogisticRegressionTarget(Matrix inputs, Vector labels, std::string name = "logistic");

  Index dim() const override { return inputs_.cols(); }
  std::string name() const override { return name_; }
  double evaluate(const Vector& theta, Vector& grad) const override;

  const Matrix& inputs() const { return inputs_; }
  const Vector& labels() const { return labels_; }
  Index rows() const { return inputs_.rows(); }

 private:
  Matrix inputs_;
  Vector labels_;
  std::string name_;
};

/// log(1 / (1 + exp(-a))) without overflow.
double log_sigmoid(double a);
double sigmoid(double a);

/// Deterministic synthetic logistic-regression problem with unstandardized
/// features whose column scales span three orders of magnitude.
LogisticRegressionTarget synthetic_logistic(Index dim = 20, Index rows = 500,
                                            std::uint64_t seed = 20231);

/// Selects the label column of a CSV file, by header name or zero-based index.
using LabelColumn = std::variant<std::string, std::size_t>;

struct DatasetOptions {
  /// Append a trailing feature that is identically one.
  bool add_bias = false;
  /// Divide every feature by 255 (grey-scale pixel data).
  bool pixel_scale = false;
};

/**
 * Loads a comma-separated dataset. The first row is treated as a header when
 * any of its fields is non-numeric. Inputs are used as-is (not standardized).
 * Labels must take at most two distinct values: {0, 1} is kept, any other
 * pair is mapped smaller -> 0, larger -> 1.
 *
 * Throws ParseError (with line number) for malformed rows and
 * ValidationError for labels with more than two values.
 */
LogisticRegressionTarget load_csv_dataset(const std::string& path, const LabelColumn& label,
                                          const DatasetOptions& options = {});

/// Reads a purely numeric CSV (optional header) into an N x d matrix.
Matrix load_csv_matrix(const std::string& path);

}  // namespace fmala
