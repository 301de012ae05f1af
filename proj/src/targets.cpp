#include "fmala/targets.hpp"

#include <cmath>

namespace fmala {

double TargetModel::log_density(const Vector& x) const {
  Vector grad(dim());
  return evaluate(x, grad);
}

Vector TargetModel::grad_log_density(const Vector& x) const {
  Vector grad(dim());
  evaluate(x, grad);
  return grad;
}

GaussianTarget::GaussianTarget(Vector mean, Matrix covariance, std::string name)
    : mean_(std::move(mean)), cov_(std::move(covariance)), name_(std::move(name)) {
  const Index d = mean_.size();
  if (d < 1 || cov_.rows() != d || cov_.cols() != d) {
    throw InvalidParameter("gaussian target: mean and covariance dimensions disagree");
  }
  const double scale = cov_.cwiseAbs().maxCoeff();
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidParameter("gaussian target: covariance is not symmetric");
  }
  cov_ = 0.5 * (cov_ + cov_.transpose());
  Eigen::LLT<Matrix> llt(cov_);
  if (llt.info() != Eigen::Success) {
    throw InvalidParameter("gaussian target: covariance is not positive definite");
  }
  chol_ = llt.matrixL();
  precision_ = llt.solve(Matrix::Identity(d, d));
  precision_ = 0.5 * (precision_ + precision_.transpose());
}

double GaussianTarget::evaluate(const Vector& x, Vector& grad) const {
  const Vector diff = x - mean_;
  grad.noalias() = -(precision_ * diff);
  return 0.5 * diff.dot(grad);
}

Vector GaussianTarget::sample(Rng& rng) const {
  return mean_ + chol_ * standard_normal(rng, dim());
}

GaussianTarget standard_normal_target(Index dim) {
  return GaussianTarget(Vector::Zero(dim), Matrix::Identity(dim, dim), "standard_normal");
}

GaussianTarget gaussian_2d_correlated() {
  Matrix cov(2, 2);
  cov << 1.0, 0.995, 0.995, 1.0;
  return GaussianTarget(Vector::Ones(2), cov, "correlated_2d");
}

GaussianTarget gaussian_gp_target(Index dim) {
  if (dim < 2) throw InvalidParameter("gp target needs dim >= 2");
  Vector grid(dim);
  for (Index i = 0; i < dim; ++i) {
    grid[i] = 1.0 + static_cast<double>(i) / static_cast<double>(dim - 1);
  }
  Matrix cov(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) {
      const double diff = grid[i] - grid[j];
      cov(i, j) = grid[i] * grid[j] * std::exp(-0.5 * diff * diff / 0.09);
    }
    cov(i, i) += 0.001;
  }
  return GaussianTarget(Vector::Ones(dim), cov, "gp");
}

GaussianTarget gaussian_inhomogeneous(Index dim) {
  if (dim < 1) throw InvalidParameter("inhomogeneous target needs dim >= 1");
  Vector var(dim);
  for (Index i = 0; i < dim; ++i) {
    const double sd = static_cast<double>(i + 1) / static_cast<double>(dim);
    var[i] = sd * sd;
  }
  return GaussianTarget(Vector::Ones(dim), var.asDiagonal().toDenseMatrix(),
                        dim == 100 ? "inhomogeneous" : "inhomogeneous_scaled_grid");
}

double log_sigmoid(double a) {
  return a >= 0.0 ? -std::log1p(std::exp(-a)) : a - std::log1p(std::exp(a));
}

double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

LogisticRegressionTarget::LogisticRegressionTarget(Matrix inputs, Vector labels,
                                                   std::string name)
    : inputs_(std::move(inputs)), labels_(std::move(labels)), name_(std::move(name)) {
  if (inputs_.rows() != labels_.size()) {
    throw ValidationError("logistic target: " + std::to_string(inputs_.rows()) +
                          " input rows but " + std::to_string(labels_.size()) + " labels");
  }
  if (inputs_.cols() < 1) throw ValidationError("logistic target: no features");
  if (!inputs_.allFinite()) throw ValidationError("logistic target: non-finite inputs");
  for (Index i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != 0.0 && labels_[i] != 1.0) {
      throw ValidationError("logistic target: label " + std::to_string(labels_[i]) +
                            " at row " + std::to_string(i) + " is not 0 or 1");
    }
  }
}

double LogisticRegressionTarget::evaluate(const Vector& theta, Vector& grad) const {
  const Vector logits = inputs_ * theta;
  double logp = -0.5 * theta.squaredNorm();
  Vector resid(logits.size());
  for (Index i = 0; i < logits.size(); ++i) {
    const double a = logits[i];
    const double y = labels_[i];
    logp += y * log_sigmoid(a) + (1.0 - y) * log_sigmoid(-a);
    resid[i] = y - sigmoid(a);
  }
  grad.noalias() = inputs_.transpose() * resid;
  grad -= theta;
  return logp;
}

LogisticRegressionTarget synthetic_logistic(Index dim, Index rows, std::uint64_t seed) {
  if (dim < 2 || rows < 1) throw InvalidParameter("synthetic logistic: bad shape");
  Rng rng = make_stream(seed, 0);
  Vector scales(dim);
  for (Index j = 0; j < dim; ++j) {
    scales[j] = std::pow(10.0, -1.5 + 3.0 * static_cast<double>(j) / static_cast<double>(dim - 1));
  }
  Vector truth = standard_normal(rng, dim);
  truth = 2.0 * truth.cwiseQuotient(scales) / std::sqrt(static_cast<double>(dim));
  Matrix z(rows, dim);
  Vector y(rows);
  for (Index i = 0; i < rows; ++i) {
    z.row(i) = ((standard_normal(rng, dim).array() + 0.5) * scales.array()).transpose();
    y[i] = uniform01(rng) < sigmoid(z.row(i).dot(truth)) ? 1.0 : 0.0;
  }
  return LogisticRegressionTarget(std::move(z), std::move(y), "synthetic_logistic");
}

}  // namespace fmala
