#pragma once

#include <stdexcept>
#include <string>

namespace junglekit {

/// A caller broke an operation's precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A configuration, registry or pricing document could not be loaded.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A query crossed the privacy boundary with detectable PII in it.
class PiiRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PricingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A simulation-wide safety property was observed to fail.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An edge node could not be reached by the backend.
class LinkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace junglekit
