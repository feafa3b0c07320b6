#pragma once

#include <stdexcept>
#include <string>

namespace comc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument lies outside the mathematical domain of a relation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Requested flow exceeds what the fundamental diagram admits.
class InfeasibleDemandError : public Error {
 public:
  using Error::Error;
};

// Effective outer-lane flow collapsed to zero or below.
class DegenerateDemandError : public Error {
 public:
  using Error::Error;
};

// Two traffic states with equal density: no shockwave is defined.
class SingularStateError : public Error {
 public:
  using Error::Error;
};

// Configuration rejected at load time. `field()` is a dotted path into the
// scenario document, e.g. "coordination.rho".
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// The optimizer found no feasible grid point.
class InfeasiblePlanError : public Error {
 public:
  using Error::Error;
};

// Malformed trip or report data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Collision, conservation, or speed-cap violation inside the microsimulator.
class SimulationInvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace comc
