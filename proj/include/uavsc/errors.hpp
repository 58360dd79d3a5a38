#pragma once

#include <stdexcept>
#include <string>

namespace uavsc {

/// Invalid configuration; the message names the violated invariant.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// An argument outside the domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// API used in the wrong order (e.g. stepping before reset).
class UsageError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// NaN or infinity where finite values are required.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Not enough stored data to satisfy a request.
class InsufficientDataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace uavsc
