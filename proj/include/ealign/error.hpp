#pragma once

#include <stdexcept>
#include <string>

namespace ealign {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A function was evaluated outside its mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed numerical input (non-finite entries, bad sizes, bad counts).
class InputError : public Error {
 public:
  using Error::Error;
};

/// The requested combination of kernel, domain and data admits no solution,
/// e.g. a torus state whose velocity slope does not integrate to zero.
class CompatibilityError : public Error {
 public:
  CompatibilityError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// A scenario or run configuration violates one of its hypotheses.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// A precondition of a diagnostic does not hold for the given trajectory.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Step rejected because the time step exceeds the stable bound.
class CflViolation : public Error {
 public:
  CflViolation(const std::string& what, double suggested_dt)
      : Error(what), suggested_dt_(suggested_dt) {}
  double suggested_dt() const { return suggested_dt_; }

 private:
  double suggested_dt_;
};

/// Closed-form comparison solution evaluated at or past its pole.
class PoleError : public Error {
 public:
  PoleError(const std::string& what, double blowup_time)
      : Error(what), blowup_time_(blowup_time) {}
  double blowup_time() const { return blowup_time_; }

 private:
  double blowup_time_;
};

/// Configuration file problems: unknown keys, wrong types, invalid values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ealign
