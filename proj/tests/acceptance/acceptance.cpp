// Acceptance suite. Prints one PASS/FAIL line per criterion; `--only N` runs
// a single criterion. Exit status is non-zero if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fmala/diagnostics.hpp"
#include "fmala/harness.hpp"
#include "fmala/preconditioner.hpp"
#include "fmala/samplers.hpp"
#include "fmala/theory.hpp"

using namespace fmala;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;  // <= 0: no runtime bound
  std::function<Outcome()> run;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[1024];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

Matrix random_spd(Index d, Rng& rng) {
  Matrix g(d, d);
  for (Index j = 0; j < d; ++j) g.col(j) = standard_normal(rng, d);
  Matrix a = g * g.transpose() / static_cast<double>(d);
  a.diagonal().array() += 0.5;
  return 0.5 * (a + a.transpose());
}

double rel_frob(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

// Mean over replicates of the chosen ESS statistic.
struct EssMeans {
  double max = 0.0, median = 0.0, min = 0.0;
  std::vector<double> first_coordinate;
  std::string summary;
};

EssMeans run_benchmark(const std::string& target, const std::string& sampler,
                       const std::string& signal = "rb") {
  ExperimentConfig c;
  c.target.name = target;
  SamplerSpec s;
  s.name = sampler;
  s.signal = signal;
  c.samplers = {s};
  c.burn_in = 20000;
  c.collect = 20000;
  c.replicates = 10;
  c.base_seed = 2024;
  const ExperimentResult r = run_experiment(c);
  std::vector<EssReport> reports;
  EssMeans m;
  for (const auto& rep : r.samplers.at(0).replicates) {
    reports.push_back(rep.ess);
    m.first_coordinate.push_back(rep.ess.per_dim.at(0));
  }
  const ReplicateSummary sum = aggregate_replicates(reports);
  m.max = sum.max.mean;
  m.median = sum.median.mean;
  m.min = sum.min.mean;
  m.summary = r.samplers[0].display_name + " max " + format_mean_std(sum.max) + ", median " +
              format_mean_std(sum.median) + ", min " + format_mean_std(sum.min);
  return m;
}

Outcome ac1() {
  Rng rng = make_stream(101, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Index d = 1 + static_cast<Index>(rng() % 20);
    const int n = 1 + static_cast<int>(rng() % 500);
    const double lambda = trial % 2 == 0 ? 1.0 : 10.0;
    SqrtPreconditioner p(d, lambda);
    Matrix wood = Matrix::Identity(d, d) / lambda;
    Matrix fisher = lambda * Matrix::Identity(d, d);
    for (int i = 0; i < n; ++i) {
      const Vector s = standard_normal(rng, d);
      p.observe(s);
      wood = woodbury_update(wood, s);
      fisher += s * s.transpose();
    }
    const Matrix direct = fisher.inverse();
    const Matrix rrt = p.inverse_fisher();
    worst = std::max({worst, rel_frob(rrt, direct), rel_frob(wood, direct), rel_frob(rrt, wood)});
  }
  return {worst < 1e-8, fmt("max relative Frobenius error %.3e over 50 trials", worst)};
}

Outcome ac2() {
  Rng rng = make_stream(102, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index d = 1 + trial % 10;
    const GaussianTarget target(standard_normal(rng, d), random_spd(d, rng), "g");
    const Matrix A = random_spd(d, rng);
    const Matrix A_inv = A.inverse();
    const Matrix R = Eigen::LLT<Matrix>(A).matrixL();
    const double sigma2 = std::pow(10.0, -2.0 + 2.0 * uniform01(rng));
    const ChainState x = ChainState::at(target, target.mean() + standard_normal(rng, d));
    const MalaTransition t = mala_transition(x, target, &R, sigma2, rng);
    const ChainState& y = t.candidate;
    auto log_q = [&](const ChainState& to, const ChainState& from) {
      const Vector r = to.x - from.x - (0.5 * sigma2) * (A * from.grad);
      return -0.5 * r.dot(A_inv * r) / sigma2;
    };
    const double naive = y.logpi - x.logpi + log_q(x, y) - log_q(y, x);
    worst = std::max(worst, std::abs(t.log_ratio - naive));
  }
  return {worst < 1e-9, fmt("max |log-ratio difference| %.3e over 1000 configurations", worst)};
}

Outcome ac3() {
  theory::EsjdProblem p;
  p.fisher = Matrix::Zero(2, 2);
  p.fisher.diagonal() << 1.0, 4.0;
  p.delta = 1.0;
  p.trace_budget = 1.25;
  const theory::GridExtrema g = theory::diagonal_grid_search(p, 1e-3);
  const bool grid_ok = std::abs(g.argmax[0] - 1.0) <= 1e-3 && std::abs(g.argmax[1] - 0.25) <= 1e-3;

  Rng rng = make_stream(103, 0);
  long violations = 0;
  long total = 0;
  double worst = 0.0;
  for (int f = 0; f < 100; ++f) {
    const Index d = 2 + f % 5;
    theory::EsjdProblem q;
    q.fisher = theory::random_fisher(d, rng);
    q.delta = 1.0;
    q.trace_budget = static_cast<double>(d);
    const theory::DominanceCounts dc = theory::dominance_check(q, 1000, rng);
    violations += dc.above_optimum;
    total += dc.candidates;
    worst = std::max(worst, dc.max_excess);
  }
  const bool dominance_ok = violations == 0;
  return {grid_ok && dominance_ok,
          fmt("grid argmax diag(%.3f, %.3f) with J = %.4f vs J(A*) = %.4f at diag(1, 0.25); "
              "%ld of %ld random candidates exceed J(A*) (largest excess %.3g)",
              g.argmax[0], g.argmax[1], g.max_value, esjd_objective(p, theory::optimal_preconditioner(p)),
              violations, total, worst)};
}

Outcome ac4() {
  Rng rng = make_stream(104, 0);
  const Index d = 4;
  const GaussianTarget sn = standard_normal_target(d);
  const theory::JumpMoments m =
      theory::jump_covariance_mc(sn, Matrix::Identity(d, d), 0.5, 1'000'000, rng);
  const Matrix z = (m.second_moment - 0.5625 * Matrix::Identity(d, d)).cwiseQuotient(m.standard_error);
  const double worst = z.cwiseAbs().maxCoeff();
  return {worst < 3.0, fmt("d = %ld, max |entry - formula| = %.2f standard errors", static_cast<long>(d), worst)};
}

Outcome ac5() {
  const GaussianTarget g = gaussian_gp_target(10);
  const Matrix R = g.cholesky_factor();
  const double sigma2 = 0.8;
  auto chain = [&](const Matrix& r) {
    FisherMalaOptions o;
    o.init_iters = 0;
    FisherMalaKernel k(10, o);
    k.set_sqrt(r);
    k.set_sigma2(sigma2);
    k.freeze();
    Rng rng = make_stream(105, 0);
    ChainState s = ChainState::at(g, standard_normal(rng, 10));
    Matrix path(1000, 10);
    for (int i = 0; i < 1000; ++i) {
      k.step(s, g, rng);
      path.row(i) = s.x.transpose();
    }
    return path;
  };
  const Matrix base = chain(R);
  bool identical = true;
  std::string detail;
  for (double k : {0.01, 100.0}) {
    const Matrix scaled = chain(std::sqrt(k) * R);
    const bool same = scaled == base;
    identical = identical && same;
    long differing = 0;
    for (Index i = 0; i < base.rows(); ++i) differing += base.row(i) != scaled.row(i) ? 1 : 0;
    detail += fmt("k = %g: %s (max |dx| %.3e, %ld of 1000 states differ); ", k,
                  same ? "bit-identical" : "differs", (scaled - base).cwiseAbs().maxCoeff(),
                  differing);
  }
  return {identical, detail};
}

Outcome ac6() {
  const GaussianTarget sn = standard_normal_target(10);
  Rng rng = make_stream(106, 0);
  SimpleMalaKernel k(10);
  ChainState s = ChainState::at(sn, standard_normal(rng, 10));
  long accepted = 0;
  for (int i = 0; i < 20000; ++i) {
    const StepDiagnostics d = k.step(s, sn, rng);
    if (i >= 15000 && d.accepted) ++accepted;
  }
  const double rate = accepted / 5000.0;
  return {std::abs(rate - 0.574) <= 0.05,
          fmt("acceptance over the last 5000 burn-in steps %.4f", rate)};
}

Outcome ac7() {
  const GaussianTarget g = gaussian_2d_correlated();
  Rng rng = make_stream(107, 0);
  FisherMalaKernel k(2);
  ChainOptions o;
  o.burn_in = 500 + 20000;
  o.collect = 0;
  o.trace_every = 500;
  o.reference_covariance = &g.covariance();
  o.keep_samples = false;
  const ChainRun run = run_chain(k, g, standard_normal(rng, 2), rng, o);
  const double at500 = run.trace.frobenius_norm.front();
  const double final_value = run.trace.frobenius_norm.back();
  return {final_value < 0.1 && final_value < 0.1 * at500,
          fmt("distance %.4f at iteration %ld, %.4f after %ld adaptation steps (ratio %.4f)",
              at500, run.trace.iteration.front(), final_value,
              run.trace.iteration.back() - 500, final_value / at500)};
}

Outcome ac8() {
  const EssMeans fisher = run_benchmark("gp", "fisher_mala");
  const EssMeans mala = run_benchmark("gp", "mala");
  const EssMeans ada = run_benchmark("gp", "ada_mala");
  const EssMeans mm = run_benchmark("gp", "mmala");
  const bool ok = fisher.median >= 1500 && fisher.median <= 2400 && mala.median < 30 &&
                  ada.median >= 400 && ada.median <= 900 && mm.median >= 1500 &&
                  mm.median <= 2400;
  return {ok, fisher.summary + "; " + mala.summary + "; " + ada.summary + "; " + mm.summary};
}

Outcome ac9() {
  const EssMeans fisher = run_benchmark("inhomogeneous", "fisher_mala");
  const EssMeans mala = run_benchmark("inhomogeneous", "mala");
  double first = 0.0;
  for (double v : mala.first_coordinate) first += v / mala.first_coordinate.size();
  const bool ok = fisher.min > 1000 && mala.min < 10 && mala.max > 5000 && first > 5000;
  return {ok, fisher.summary + "; " + mala.summary +
                  fmt("; MALA ESS on the smallest-scale coordinate %.1f", first)};
}

Outcome ac10() {
  const EssMeans rb = run_benchmark("gp", "fisher_mala", "rb");
  const EssMeans norb = run_benchmark("gp", "fisher_mala", "no_rb");
  const EssMeans rb_inh = run_benchmark("inhomogeneous", "fisher_mala", "rb");
  const EssMeans paired = run_benchmark("inhomogeneous", "fisher_mala", "paired");
  const double rel = std::abs(rb.median - norb.median) / rb.median;
  const double ratio = paired.min / rb_inh.min;
  return {rel < 0.2 && ratio < 0.3,
          fmt("GP median ESS RB %.1f vs no-RB %.1f (relative gap %.3f); inhomogeneous min ESS "
              "paired %.1f vs RB %.1f (ratio %.3f)",
              rb.median, norb.median, rel, paired.min, rb_inh.min, ratio)};
}

Outcome ac11() {
  const EssMeans fisher = run_benchmark("synthetic_logistic", "fisher_mala");
  const EssMeans mala = run_benchmark("synthetic_logistic", "mala");
  return {fisher.min >= 10.0 * mala.min,
          fisher.summary + "; " + mala.summary + fmt("; min-ESS ratio %.1f", fisher.min / mala.min)};
}

Outcome ac12() {
  const long n = 20000;
  double iid = 0.0, ar = 0.0;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng = make_stream(112, static_cast<std::uint64_t>(seed));
    Vector white = standard_normal(rng, n);
    iid += effective_sample_size(white) / 20.0;
    Vector x(n);
    x[0] = standard_normal(rng, 1)[0] / std::sqrt(1.0 - 0.81);
    const Vector z = standard_normal(rng, n);
    for (long i = 1; i < n; ++i) x[i] = 0.9 * x[i - 1] + z[i];
    ar += effective_sample_size(x) / 20.0;
  }
  const double ar_target = n / 19.0;
  const bool ok = iid >= 0.85 * n && iid <= 1.15 * n && std::abs(ar - ar_target) <= 0.25 * ar_target;
  return {ok, fmt("iid ESS %.1f (N = %ld); AR(1) ESS %.1f vs N/19 = %.1f", iid, n, ar, ar_target)};
}

Outcome ac13() {
  Vector sd(5);
  sd << 0.5, 0.75, 1.0, 1.5, 2.0;
  Matrix corr = Matrix::Identity(5, 5);
  for (Index i = 0; i < 5; ++i) {
    for (Index j = 0; j < 5; ++j) {
      if (i != j) corr(i, j) = std::pow(0.5, std::abs(static_cast<double>(i - j)));
    }
  }
  const GaussianTarget g(Vector::Ones(5), sd.asDiagonal() * corr * sd.asDiagonal(), "aniso5");

  std::vector<SamplerSpec> specs;
  for (const char* name : {"mala", "fisher_mala", "ada_mala", "mmala", "hmc"}) {
    SamplerSpec s;
    s.name = name;
    specs.push_back(s);
  }
  for (const char* signal : {"no_rb", "paired"}) {
    SamplerSpec s;
    s.name = "fisher_mala";
    s.signal = signal;
    specs.push_back(s);
  }
  bool ok = true;
  std::string detail;
  std::uint64_t stream = 0;
  for (const auto& spec : specs) {
    const auto kernel = make_kernel(spec, g);
    Rng rng = make_stream(113, stream++);
    ChainOptions o;
    o.burn_in = 5000;
    o.collect = 100000;
    const ChainRun run = run_chain(*kernel, g, standard_normal(rng, 5), rng, o);
    const EssReport e = ess(run.samples);
    double worst_z = 0.0, worst_var = 0.0;
    for (Index j = 0; j < 5; ++j) {
      const Vector col = run.samples.col(j);
      const double mean = col.mean();
      const double var = (col.array() - mean).square().sum() / (col.size() - 1.0);
      const double se = std::sqrt(var / e.per_dim[static_cast<std::size_t>(j)]);
      worst_z = std::max(worst_z, std::abs(mean - 1.0) / se);
      worst_var = std::max(worst_var, std::abs(var / g.covariance()(j, j) - 1.0));
    }
    const bool pass = worst_z < 4.0 && worst_var < 0.1;
    ok = ok && pass;
    detail += fmt("%s %s (mean %.2f SE, variance %.1f%%); ", kernel->name().c_str(),
                  pass ? "ok" : "FAILED", worst_z, 100.0 * worst_var);
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
      return 2;
    }
  }

  const std::vector<Criterion> criteria = {
      {1, "square-root recursion vs Woodbury vs direct inverse", 10.0, ac1},
      {2, "acceptance ratio via h-terms vs explicit densities", 5.0, ac2},
      {3, "inverse Fisher maximizes ESJD (grid and random dominance)", 30.0, ac3},
      {4, "jump second moment by Monte Carlo", 20.0, ac4},
      {5, "bit-identical chains under preconditioner rescaling", 0.0, ac5},
      {6, "MALA step size targets 0.574 acceptance", 0.0, ac6},
      {7, "2-D correlated Gaussian preconditioner convergence", 30.0, ac7},
      {8, "GP target ESS (FisherMALA, MALA, AdaMALA, mMALA)", 4 * 600.0, ac8},
      {9, "inhomogeneous Gaussian ESS (FisherMALA, MALA)", 2 * 600.0, ac9},
      {10, "signal ablation (RB vs no-RB, paired estimator)", 4 * 600.0, ac10},
      {11, "synthetic logistic regression ESS gap", 2 * 600.0, ac11},
      {12, "ESS estimator calibration", 0.0, ac12},
      {13, "frozen-kernel invariance moments", 0.0, ac13},
  };

  bool all = true;
  int ran = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_seconds > 0.0 && secs > c.budget_seconds) {
      out.pass = false;
      out.detail += fmt(" [runtime %.1f s exceeds %.0f s]", secs, c.budget_seconds);
    }
    std::printf("AC%02d %s  %s: %s (%.1f s)\n", c.id, out.pass ? "PASS" : "FAIL", c.title,
                out.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && out.pass;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  return all ? 0 : 1;
}
