#pragma once

#include <stdexcept>
#include <string>

namespace fracfk {

// Exit-code category carried by every library error.
enum class ErrorCategory { config = 2, numerical = 3, io = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Invalid parameters (non-positive index, malformed key, ...).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

/// Walk requested outside the regime the generator supports.
class RegimeError : public Error {
 public:
  explicit RegimeError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

/// Argument outside an operation's mathematical domain.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorCategory::numerical, what) {}
};

/// Trial function non-positive (or non-finite) at a visited point.
class TrialDomainError : public Error {
 public:
  explicit TrialDomainError(const std::string& what) : Error(ErrorCategory::numerical, what) {}
};

class FitError : public Error {
 public:
  explicit FitError(const std::string& what) : Error(ErrorCategory::numerical, what) {}
};

/// All estimator weights vanished.
class DegenerateEstimateError : public Error {
 public:
  explicit DegenerateEstimateError(const std::string& what) : Error(ErrorCategory::numerical, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorCategory::numerical, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

}  // namespace fracfk
