#include "fmala/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace fmala::theory {
namespace {

bool is_spd(const Matrix& A) {
  if (A.rows() != A.cols() || A.rows() == 0 || !A.allFinite()) return false;
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) return false;
  Eigen::LLT<Matrix> llt(A);
  return llt.info() == Eigen::Success;
}

Matrix haar_orthogonal(Index dim, Rng& rng) {
  Matrix g(dim, dim);
  for (Index j = 0; j < dim; ++j) g.col(j) = standard_normal(rng, dim);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string fmt(const Vector& v) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ")";
  return os.str();
}

}  // namespace

void EsjdProblem::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidParameter("delta must be positive");
  if (!(trace_budget > 0.0) || !std::isfinite(trace_budget)) {
    throw InvalidParameter("trace budget must be positive");
  }
  if (!is_spd(fisher)) throw InvalidParameter("Fisher matrix must be symmetric positive definite");
}

Matrix jump_covariance(const Matrix& fisher, const Matrix& A, double delta) {
  return (0.25 * delta * delta) * (A * fisher * A) + delta * A;
}

double esjd_objective(const EsjdProblem& p, const Matrix& A) {
  if (A.rows() != p.fisher.rows() || !is_spd(A)) {
    throw InvalidParameter("preconditioner must be symmetric positive definite of matching size");
  }
  return jump_covariance(p.fisher, A, p.delta).trace();
}

Matrix optimal_preconditioner(const EsjdProblem& p) {
  p.validate();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(p.fisher);
  const Vector inv_mu = eig.eigenvalues().cwiseInverse();
  const double k = p.trace_budget / inv_mu.sum();
  Matrix a = eig.eigenvectors() * (k * inv_mu).asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (a + a.transpose());
}

JumpMoments jump_covariance_mc(const GaussianTarget& target, const Matrix& A, double delta,
                               long n_samples, Rng& rng) {
  if (n_samples < 10'000) throw InvalidParameter("jump_covariance_mc needs at least 10^4 samples");
  if (!(delta > 0.0)) throw InvalidParameter("delta must be positive");
  const Index d = target.dim();
  if (A.rows() != d || !is_spd(A)) throw InvalidParameter("A must be SPD of the target dimension");
  const Matrix sqrt_a = Eigen::LLT<Matrix>(A).matrixL();
  const double noise_scale = std::sqrt(delta);

  Vector sum = Vector::Zero(d);
  Vector sum_sq = Vector::Zero(d);
  Matrix m1 = Matrix::Zero(d, d);
  Matrix m2 = Matrix::Zero(d, d);
  Vector grad(d);
  Vector jump(d);
  for (long i = 0; i < n_samples; ++i) {
    const Vector x = target.sample(rng);
    target.evaluate(x, grad);
    jump.noalias() = (0.5 * delta) * (A * grad);
    jump.noalias() += noise_scale * (sqrt_a * standard_normal(rng, d));
    sum += jump;
    sum_sq += jump.cwiseAbs2();
    const Matrix outer = jump * jump.transpose();
    m1 += outer;
    m2 += outer.cwiseAbs2();
  }
  const double n = static_cast<double>(n_samples);
  JumpMoments out;
  out.samples = n_samples;
  out.mean = sum / n;
  out.second_moment = m1 / n;
  const Matrix var = ((m2 - n * out.second_moment.cwiseAbs2()) / (n - 1.0)).cwiseMax(0.0);
  out.standard_error = (var / n).cwiseSqrt();
  const Vector mean_var = ((sum_sq - n * out.mean.cwiseAbs2()) / (n - 1.0)).cwiseMax(0.0);
  out.mean_standard_error = (mean_var / n).cwiseSqrt();
  return out;
}

GridExtrema diagonal_grid_search(const EsjdProblem& p, double step) {
  p.validate();
  const Index d = p.fisher.rows();
  if (d != 2 && d != 3) throw InvalidParameter("grid search supports dimension 2 or 3 only");
  if (!(step > 0.0)) throw InvalidParameter("grid step must be positive");
  const long units = std::lround(p.trace_budget / step);
  if (std::abs(static_cast<double>(units) * step - p.trace_budget) > 1e-9 * p.trace_budget) {
    throw InvalidParameter("trace budget must be a multiple of the grid step");
  }
  if (units < d) throw InvalidParameter("grid too coarse for a positive diagonal");

  GridExtrema out;
  out.max_value = -std::numeric_limits<double>::infinity();
  out.min_value = std::numeric_limits<double>::infinity();
  Vector a(d);
  auto visit = [&]() {
    const double j =
        0.25 * p.delta * p.delta * a.cwiseAbs2().dot(p.fisher.diagonal()) + p.delta * a.sum();
    ++out.evaluated;
    if (j > out.max_value) {
      out.max_value = j;
      out.argmax = a;
    }
    if (j < out.min_value) {
      out.min_value = j;
      out.argmin = a;
    }
  };
  if (d == 2) {
    for (long i = 1; i < units; ++i) {
      a << static_cast<double>(i) * step, static_cast<double>(units - i) * step;
      visit();
    }
  } else {
    for (long i = 1; i < units - 1; ++i) {
      for (long j = 1; i + j < units; ++j) {
        a << static_cast<double>(i) * step, static_cast<double>(j) * step,
            static_cast<double>(units - i - j) * step;
        visit();
      }
    }
  }
  return out;
}

Matrix random_spd_with_trace(Index dim, double trace, Rng& rng) {
  if (dim < 1 || !(trace > 0.0)) throw InvalidParameter("random SPD needs dim >= 1 and trace > 0");
  const Matrix q = haar_orthogonal(dim, rng);
  Vector eig(dim);
  for (Index i = 0; i < dim; ++i) eig[i] = -std::log(1.0 - uniform01(rng));
  eig *= trace / eig.sum();
  Matrix a = q * eig.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

Matrix random_fisher(Index dim, Rng& rng) {
  const Matrix q = haar_orthogonal(dim, rng);
  Vector mu = (1.5 * standard_normal(rng, dim)).array().exp();
  Matrix f = q * mu.asDiagonal() * q.transpose();
  return 0.5 * (f + f.transpose());
}

DominanceCounts dominance_check(const EsjdProblem& p, long candidates, Rng& rng) {
  const Matrix a_star = optimal_preconditioner(p);
  const double j_star = esjd_objective(p, a_star);
  const double tol = 1e-12 * std::max(1.0, std::abs(j_star));
  DominanceCounts out;
  out.candidates = candidates;
  out.max_excess = -std::numeric_limits<double>::infinity();
  out.min_excess = std::numeric_limits<double>::infinity();
  for (long i = 0; i < candidates; ++i) {
    const Matrix a = random_spd_with_trace(p.fisher.rows(), p.trace_budget, rng);
    const double excess = esjd_objective(p, a) - j_star;
    if (excess > tol) ++out.above_optimum;
    if (excess < -tol) ++out.below_optimum;
    out.max_excess = std::max(out.max_excess, excess);
    out.min_excess = std::min(out.min_excess, excess);
  }
  return out;
}

std::vector<TheoryCheck> verify_theory(const VerificationOptions& o) {
  if (o.dim < 1) throw InvalidParameter("dimension must be >= 1");
  std::vector<TheoryCheck> checks;
  Rng rng = make_stream(o.seed, 0);

  {
    const double delta = 0.5;
    const GaussianTarget target = standard_normal_target(o.dim);
    const Matrix a = Matrix::Identity(o.dim, o.dim);
    const JumpMoments mc = jump_covariance_mc(target, a, delta, o.mc_samples, rng);
    const Matrix expected = jump_covariance(Matrix::Identity(o.dim, o.dim), a, delta);
    const Matrix z = (mc.second_moment - expected).cwiseQuotient(mc.standard_error);
    const double worst = z.cwiseAbs().maxCoeff();
    const double mean_ratio = mc.mean.norm() / mc.mean_standard_error.norm();
    TheoryCheck c{"jump_second_moment", worst < 3.0 && mean_ratio < 4.0, ""};
    c.detail = "max |MC - formula| / SE = " + fmt(worst) + ", |mean| / SE = " + fmt(mean_ratio) +
               " (delta 0.5, A = I, " + std::to_string(o.mc_samples) + " draws)";
    checks.push_back(c);
  }

  {
    const double delta = 1e-4;
    Vector sd(o.dim);
    for (Index i = 0; i < o.dim; ++i) sd[i] = 1.0 + static_cast<double>(i);
    const GaussianTarget target(Vector::Zero(o.dim), Matrix(sd.cwiseAbs2().asDiagonal()),
                                "diagonal");
    Vector a_diag(o.dim);
    for (Index i = 0; i < o.dim; ++i) a_diag[i] = 0.5 + 0.25 * static_cast<double>(i);
    const Matrix a = a_diag.asDiagonal();
    const JumpMoments mc = jump_covariance_mc(target, a, delta, o.mc_samples, rng);
    const double rel = ((mc.second_moment.diagonal() / delta - a_diag).cwiseQuotient(a_diag))
                           .cwiseAbs()
                           .maxCoeff();
    const double z = ((mc.second_moment.diagonal() - delta * a_diag)
                          .cwiseQuotient(mc.standard_error.diagonal()))
                         .cwiseAbs()
                         .maxCoeff();
    TheoryCheck c{"small_step_limit", z < 4.0, ""};
    c.detail = "max relative deviation of diag(covariance / delta) from diag(A) = " + fmt(rel) +
               " (" + fmt(z) + " SE)";
    checks.push_back(c);
  }

  EsjdProblem grid_problem;
  grid_problem.fisher = Matrix::Zero(2, 2);
  grid_problem.fisher.diagonal() << 1.0, 4.0;
  grid_problem.delta = 1.0;
  grid_problem.trace_budget = 1.25;
  const Matrix grid_opt = optimal_preconditioner(grid_problem);
  const GridExtrema grid = diagonal_grid_search(grid_problem, 1e-3);
  const double argmax_err = (grid.argmax - grid_opt.diagonal()).cwiseAbs().maxCoeff();
  const double argmin_err = (grid.argmin - grid_opt.diagonal()).cwiseAbs().maxCoeff();
  checks.push_back({"grid_argmax_is_inverse_fisher", argmax_err <= 1e-3 + 1e-12,
                    "argmax " + fmt(grid.argmax) + " J = " + fmt(grid.max_value) + ", A* diag " +
                        fmt(Vector(grid_opt.diagonal())) +
                        " J = " + fmt(esjd_objective(grid_problem, grid_opt))});
  checks.push_back({"grid_argmin_is_inverse_fisher", argmin_err <= 1e-3 + 1e-12,
                    "argmin " + fmt(grid.argmin) + " J = " + fmt(grid.min_value)});

  long above = 0;
  long below = 0;
  long total = 0;
  double eig_err = 0.0;
  double scale_err = 0.0;
  double trace_err = 0.0;
  for (long f = 0; f < o.fishers; ++f) {
    const Index d = 2 + static_cast<Index>(f % 5);
    EsjdProblem p;
    p.fisher = random_fisher(d, rng);
    p.delta = 0.1 + 1.9 * uniform01(rng);
    p.trace_budget = static_cast<double>(d);
    const DominanceCounts dc = dominance_check(p, o.candidates, rng);
    above += dc.above_optimum;
    below += dc.below_optimum;
    total += dc.candidates;

    const Matrix a_star = optimal_preconditioner(p);
    trace_err = std::max(trace_err, std::abs(a_star.trace() - p.trace_budget));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(p.fisher);
    const double k = p.trace_budget / eig.eigenvalues().cwiseInverse().sum();
    for (Index i = 0; i < d; ++i) {
      const Vector u = eig.eigenvectors().col(i);
      const Vector resid = a_star * u - (k / eig.eigenvalues()[i]) * u;
      eig_err = std::max(eig_err, resid.norm() / (k / eig.eigenvalues()[i]));
    }
    EsjdProblem doubled = p;
    doubled.trace_budget *= 2.0;
    const Matrix a2 = optimal_preconditioner(doubled);
    scale_err = std::max(scale_err, (a2 - 2.0 * a_star).norm() / a2.norm());
  }
  const std::string tally = std::to_string(total) + " candidates over " +
                            std::to_string(o.fishers) + " Fisher matrices";
  checks.push_back({"dominance_maximizer", above == 0,
                    std::to_string(above) + " of " + tally + " have larger J than A*"});
  checks.push_back({"dominance_minimizer", below == 0,
                    std::to_string(below) + " of " + tally + " have smaller J than A*"});
  checks.push_back({"eigenstructure", eig_err < 1e-8,
                    "max relative eigenpair residual " + fmt(eig_err)});
  checks.push_back({"scale_law", scale_err < 1e-12, "max relative deviation " + fmt(scale_err)});
  checks.push_back({"trace_budget", trace_err < 1e-10, "max |tr(A*) - c| " + fmt(trace_err)});
  return checks;
}

}  // namespace fmala::theory
