#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace supcbi {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violations and invalid models (including D <= 0).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Evaluation outside Im(phi) > -b, or a Riccati path leaving the integrable strip.
class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::int64_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

class InsufficientData : public Error {
 public:
  InsufficientData(const std::string& statistic, const std::string& what)
      : Error(statistic + ": " + what), statistic_(statistic) {}
  const std::string& statistic() const { return statistic_; }

 private:
  std::string statistic_;
};

// Malformed input files. line() is 1-based, 0 when not tied to a line.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class OptimizerError : public Error {
 public:
  OptimizerError(const std::string& what, std::vector<double> best, double best_value)
      : Error(what), best_(std::move(best)), best_value_(best_value) {}
  const std::vector<double>& best() const { return best_; }
  double best_value() const { return best_value_; }

 private:
  std::vector<double> best_;
  double best_value_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ValidationFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace supcbi
