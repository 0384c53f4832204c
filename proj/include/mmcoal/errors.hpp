#pragma once

#include <stdexcept>
#include <string>

namespace mmcoal {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A probability measure was required but the total mass is not 1.
class NormalizationError : public Error {
 public:
  using Error::Error;
};

/// The measure or law has no mass where it is needed (e.g. a zero total rate).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Malformed literal; column is 1-based within the literal.
class ParseError : public Error {
 public:
  ParseError(std::size_t column, const std::string& what)
      : Error("column " + std::to_string(column) + ": " + what), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// Inconsistent combination of otherwise valid settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A generation schedule violates the growth caps of a model.
class ScheduleError : public Error {
 public:
  using Error::Error;
};

/// A simulation ran past the end of its schedule or clock.
class HorizonError : public Error {
 public:
  using Error::Error;
};

/// Internal bookkeeping became inconsistent.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Result not representable as a finite double.
class OverflowError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmcoal
