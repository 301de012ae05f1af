#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fmala {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Random engine shared by every sampler and Monte Carlo routine.
using Rng = std::mt19937_64;

/// Returns an engine for stream `stream` of `base_seed`. Distinct streams are
/// statistically independent, and the result depends only on the pair, so
/// replicates can be run in any order or in parallel.
Rng make_stream(std::uint64_t base_seed, std::uint64_t stream);

/// Vector of `dim` iid N(0, 1) draws.
Vector standard_normal(Rng& rng, Index dim);

/// Uniform draw on [0, 1).
double uniform01(Rng& rng);

/// A signal fed to a preconditioner recursion contained a non-finite entry.
class InvalidSignal : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numeric parameter is outside its admissible range.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A sampler was asked to run on a target it cannot handle.
class UnsupportedTarget : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line == 0 ? what
                                     : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Input parsed but violates a semantic constraint (e.g. non-binary labels).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment configuration is malformed or inconsistent.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A target model could not be constructed from its config.
class TargetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A result file could not be written.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unrecoverable numerical failure inside a sampler; `dump()` carries the
/// state needed to diagnose it.
class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(const std::string& what, std::string dump)
      : std::runtime_error(what), dump_(std::move(dump)) {}
  const std::string& dump() const { return dump_; }

 private:
  std::string dump_;
};

}  // namespace fmala
