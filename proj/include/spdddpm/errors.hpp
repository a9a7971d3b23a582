#pragma once

#include <stdexcept>
#include <string>

namespace spdddpm {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotSymmetricError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefiniteError : public Error {
 public:
  NotPositiveDefiniteError(const std::string& msg, double offending)
      : Error(msg), offending_eigenvalue(offending) {}
  double offending_eigenvalue;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class SingularActionError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class UnsupportedDimensionError : public Error {
 public:
  using Error::Error;
};

class ShapeMismatchError : public Error {
 public:
  using Error::Error;
};

class BadConditionError : public Error {
 public:
  using Error::Error;
};

/// Dataset file could not be parsed; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, long line) : Error(msg), line_number(line) {}
  long line_number;
};

class InconsistentDimensionsError : public Error {
 public:
  using Error::Error;
};

class NoPredictorsError : public Error {
 public:
  using Error::Error;
};

class EmptySampleSetError : public Error {
 public:
  using Error::Error;
};

/// A reverse-diffusion chain produced a matrix that failed SPD validation.
class ChainDivergedError : public Error {
 public:
  ChainDivergedError(const std::string& msg, int step) : Error(msg), t(step) {}
  int t;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace spdddpm
