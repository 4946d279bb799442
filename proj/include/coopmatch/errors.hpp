#pragma once

#include <stdexcept>
#include <string>

namespace coopmatch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotConnected : public Error {
 public:
  using Error::Error;
};

class SynthesisFailure : public Error {
 public:
  using Error::Error;
};

class InvalidPoles : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class BoundViolation : public Error {
 public:
  using Error::Error;
};

class MissingNeighborData : public Error {
 public:
  using Error::Error;
};

class NotApplicable : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Raised when a state norm leaves the admissible range during integration.
class NumericBlowup : public Error {
 public:
  NumericBlowup(double time, double norm)
      : Error("numeric blowup at t=" + std::to_string(time) +
              " (state norm " + std::to_string(norm) + ")"),
        time_(time),
        norm_(norm) {}

  double time() const { return time_; }
  double norm() const { return norm_; }

 private:
  double time_;
  double norm_;
};

}  // namespace coopmatch
