#pragma once

#include <stdexcept>
#include <string>

namespace sausage {

// Invalid parameters or inconsistent configuration.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Argument outside the domain of an operation (e.g. time past the path end).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// A discretization contract would be violated; the estimate is refused.
struct AccuracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The call is legal but statistically meaningless (e.g. correlated inputs
// where independence is required).
struct MisuseError : std::logic_error {
  using std::logic_error::logic_error;
};

// Too few samples or too narrow a range for a statistic.
struct InsufficientDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sausage
