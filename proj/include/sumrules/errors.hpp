#pragma once

#include <stdexcept>
#include <string>

namespace sumrules {

// Every numerical failure in the library derives from Error; the CLI maps
// InputError to exit status 2 and everything else to 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

// Argument outside the domain of the operation (|alpha| >= 1, |E| <= 2, ...).
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

// Moment/Toeplitz or Lanczos recurrence lost positivity.
class IllConditionedError : public Error {
 public:
  IllConditionedError(const std::string& what, std::size_t order)
      : Error(what), order_(order) {}
  std::size_t order() const noexcept { return order_; }
  const char* kind() const noexcept override { return "ill-conditioned"; }

 private:
  std::size_t order_;
};

class PoleProximityError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "pole-proximity"; }
};

class RootFindingError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "root-finding"; }
};

// Internal cross-check failed (mass deficit, unitarity, ...).
class ConsistencyError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "consistency"; }
};

class StepSizeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "step-size"; }
};

// Malformed user input: bad JSON, missing fields, invalid measure data.
class InputError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "input"; }
};

}  // namespace sumrules
