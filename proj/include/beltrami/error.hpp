#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace beltrami {

enum class ErrorKind {
  invalid_argument,
  invalid_resolution,
  integration,
  step_failure,
  near_critical_point,
  degenerate,
  no_critical_points,
  unresolved_separatrix,
  topology,
  blowup,
  near_singular_offset,
  invalid_reynolds,
  geometry,
  precondition,
  cfl_violation,
  setup,
  format,
};

constexpr std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::invalid_resolution: return "invalid_resolution";
    case ErrorKind::integration: return "integration";
    case ErrorKind::step_failure: return "step_failure";
    case ErrorKind::near_critical_point: return "near_critical_point";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::no_critical_points: return "no_critical_points";
    case ErrorKind::unresolved_separatrix: return "unresolved_separatrix";
    case ErrorKind::topology: return "topology";
    case ErrorKind::blowup: return "blowup";
    case ErrorKind::near_singular_offset: return "near_singular_offset";
    case ErrorKind::invalid_reynolds: return "invalid_reynolds";
    case ErrorKind::geometry: return "geometry";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::cfl_violation: return "cfl_violation";
    case ErrorKind::setup: return "setup";
    case ErrorKind::format: return "format";
  }
  return "unknown";
}

/// Base exception of the library. Every failure carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Thrown by the phase solver when coefficients leave the representable range.
class BlowupError : public Error {
 public:
  BlowupError(double tau_reached, const std::string& what)
      : Error(ErrorKind::blowup, what), tau_reached_(tau_reached) {}
  double tau_reached() const noexcept { return tau_reached_; }

 private:
  double tau_reached_;
};

/// Thrown by the DNS stepper when the advective CFL bound is exceeded.
class CflError : public Error {
 public:
  CflError(double suggested_dt, const std::string& what)
      : Error(ErrorKind::cfl_violation, what), suggested_dt_(suggested_dt) {}
  double suggested_dt() const noexcept { return suggested_dt_; }

 private:
  double suggested_dt_;
};

}  // namespace beltrami
