#pragma once

#include <stdexcept>
#include <string>

namespace retrograph {

/// Raised when a molecule string does not parse in a domain's syntax.
class DomainSyntaxError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller broke an operation's precondition (expanding a closed node,
/// selecting from an empty open set, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A tensor op produced NaN/Inf, or shapes did not line up.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration, file-format or I/O problem.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace retrograph
