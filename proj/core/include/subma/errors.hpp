#pragma once

#include <stdexcept>
#include <string>

namespace subma {

/// Base class for all errors thrown by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Input file could not be parsed; carries the 1-based line number.
class ParseError : public Error {
public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line(line) {}
  int line;
};

/// A constructor or factory rejected its arguments.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// A symmetric matrix fell below the required spectral floor.
class SpectralFloorError : public Error {
public:
  SpectralFloorError(double lambda_min, double floor, const std::string& what)
      : Error(what), lambda_min(lambda_min), floor(floor) {}
  double lambda_min;
  double floor;
};

/// The iterative linear solver did not reach its tolerance.
class LinearSolveError : public Error {
public:
  LinearSolveError(long iterations, double estimated_error, const std::string& what)
      : Error(what), iterations(iterations), estimated_error(estimated_error) {}
  long iterations;
  double estimated_error;
};

/// Evaluating an exponential would overflow; carries the offending exponent.
class OverflowError : public Error {
public:
  OverflowError(double max_exponent, const std::string& what)
      : Error(what), max_exponent(max_exponent) {}
  double max_exponent;
};

}  // namespace subma
