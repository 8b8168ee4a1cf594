#pragma once

#include <stdexcept>
#include <string>

namespace navsort {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing, unreadable or truncated files.
class IoError : public Error {
 public:
  using Error::Error;
};

// Input data violates a structural invariant (alternation, dimensions, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Caller passed arguments that are out of contract.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Template has zero variance (ccoeff) or zero energy (ccorr).
class DegenerateTemplateError : public Error {
 public:
  using Error::Error;
};

class TrackingError : public Error {
 public:
  using Error::Error;
};

// Reference time point lacks an enclosing navigator on one side.
class BoundaryError : public Error {
 public:
  using Error::Error;
};

// A required upstream result (located positions, traces) is missing.
class DependencyError : public Error {
 public:
  using Error::Error;
};

// Phantom settings cannot be rendered as requested.
class SpecError : public Error {
 public:
  using Error::Error;
};

}  // namespace navsort
