#pragma once

#include <stdexcept>
#include <string>

namespace recon {

// Integer threshold search exhausted its admissible range without a witness.
class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sampling or enumeration would exceed a configured memory/node cap.
class ResourceLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A boundary condition admits no proper colouring of the tree.
class InconsistentBoundary : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exhaustive enumeration would exceed the configured colouring budget.
class LimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter lies outside the documented domain of an operation.
class ParameterViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Config-file or command-line validation failure; the message names the field.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace recon
