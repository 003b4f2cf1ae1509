#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace secfield {

enum class ErrorKind {
  InvalidArgument,
  Parse,
  DegenerateInput,
  Numeric,
  Config,
  OutOfRange,
  UndefinedMetric,
  Divergence,
  SingularJacobian,
  NonConvergence,
  Io,
  FormatVersion,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicatePointError : public Error {
 public:
  DuplicatePointError(Eigen::Index first, Eigen::Index second)
      : Error(ErrorKind::DegenerateInput,
              "duplicate sample points at indices " + std::to_string(first) +
                  " and " + std::to_string(second)),
        first_(first),
        second_(second) {}

  Eigen::Index first() const noexcept { return first_; }
  Eigen::Index second() const noexcept { return second_; }

 private:
  Eigen::Index first_;
  Eigen::Index second_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(double time, const std::string& what)
      : Error(ErrorKind::Divergence, what), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(Eigen::VectorXd best, double residual,
                      const std::string& what)
      : Error(ErrorKind::NonConvergence, what),
        best_(std::move(best)),
        residual_(residual) {}

  const Eigen::VectorXd& best_iterate() const noexcept { return best_; }
  double residual() const noexcept { return residual_; }

 private:
  Eigen::VectorXd best_;
  double residual_;
};

}  // namespace secfield
