#pragma once

#include <stdexcept>
#include <string>

namespace policylab {

/// Base class for every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI error object.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// A parameter violates a documented constraint (DGP spec, bound inputs).
class ParameterError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "parameter_error"; }
};

/// An operation was configured inconsistently (empty grid, augmented class on
/// data without a proxy, unsupported DGP family).
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config_error"; }
};

/// Propensity outside (0,1) where an inverse weight is needed.
class OverlapError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "overlap_error"; }
};

/// Argument outside the mathematical domain of a formula (n = 0, rho above the
/// admissible regime).
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain_error"; }
};

/// Malformed input file.
class ParseError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "parse_error"; }
};

/// File could not be opened, written or renamed.
class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io_error"; }
};

}  // namespace policylab
