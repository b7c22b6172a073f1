#pragma once

#include <stdexcept>
#include <string>

namespace enrichci {

// Argument outside an operation's mathematical domain (std::domain_error is
// used directly for those). The types below cover the remaining failure kinds.

// A root-finder or integrator could not meet its contract.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid design, rule or scenario configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller violated a precondition that depends on state (e.g. asking for an
// interval after a futility stop).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace enrichci
