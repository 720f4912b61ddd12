#pragma once

#include <stdexcept>
#include <string>

namespace awl {

// Bad arguments, malformed files, out-of-range indices.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A quantity that must be finite was not.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Surface fitting or pseudo-likelihood maximization failed.
class EstimationError : public std::runtime_error {
 public:
  explicit EstimationError(const std::string& what, std::string trace = {})
      : std::runtime_error(what), trace_(std::move(trace)) {}

  const std::string& trace() const noexcept { return trace_; }

 private:
  std::string trace_;
};

class InferenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The information matrix is numerically singular; no standard errors are produced.
class InferenceDeclined : public InferenceError {
 public:
  InferenceDeclined(const std::string& what, double condition)
      : InferenceError(what), condition_(condition) {}

  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

}  // namespace awl
