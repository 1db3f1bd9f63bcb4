#pragma once

#include <stdexcept>
#include <string>

namespace mimoalloc {

/// Argument outside the domain of an operation (non-finite input, bad size, ...).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// A root search was handed a bracket without a sign change.
class BracketingError : public std::runtime_error {
 public:
  explicit BracketingError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative solver ran out of iterations.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// A channel realization has a zero singular value on a retained subchannel.
class DegenerateChannelError : public std::runtime_error {
 public:
  explicit DegenerateChannelError(const std::string& what) : std::runtime_error(what) {}
};

/// The requested rate cannot be reached with the eligible subchannels.
class InfeasibleRateError : public std::runtime_error {
 public:
  explicit InfeasibleRateError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mimoalloc
