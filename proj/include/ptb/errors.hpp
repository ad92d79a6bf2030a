#pragma once

#include <stdexcept>
#include <string>

namespace ptb {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violated by a caller-supplied value.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class UnsupportedNorm : public Error {
 public:
  using Error::Error;
};

// Numerical routine did not reach the requested accuracy. Carries the best
// estimate it did reach so callers may decide to accept it.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double best_estimate, double error_estimate)
      : Error(what), best_estimate_(best_estimate), error_estimate_(error_estimate) {}

  double best_estimate() const noexcept { return best_estimate_; }
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double best_estimate_;
  double error_estimate_;
};

// Malformed file or payload.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Well-formed input whose values fail validation (NaN payload, bad config).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int last_finite_epoch)
      : Error(what), last_finite_epoch_(last_finite_epoch) {}

  int last_finite_epoch() const noexcept { return last_finite_epoch_; }

 private:
  int last_finite_epoch_;
};

}  // namespace ptb
