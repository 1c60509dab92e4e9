#pragma once

#include <stdexcept>
#include <string>

namespace coord {

/// Argument outside the mathematical domain of an operation (stake off-grid, probability not in [0,1]).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Wrong number of players / actions.
class ArityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Request beyond what an exhaustive routine is built for.
class CapabilityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Schedules that cannot be compared period by period.
class ComparisonError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical degeneracy in a statistical routine (empty sample, rank deficiency).
class StatsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Output could not be written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace coord
