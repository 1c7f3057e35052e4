#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace forge {

// Base for every failure the library signals on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value was certified to lie outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class NotInCantorSet : public DomainError {
 public:
  using DomainError::DomainError;
};

// A finite precision ceiling was reached before a question could be settled.
class PrecisionExhausted : public Error {
 public:
  using Error::Error;
};

// An iteration or bit budget ran out.
class BudgetExhausted : public Error {
 public:
  using Error::Error;
};

class MalformedOrder : public Error {
 public:
  using Error::Error;
};

class InconsistentOracle : public Error {
 public:
  using Error::Error;
};

class LabelNotFound : public Error {
 public:
  using Error::Error;
};

// A fixed point whose image under an order isomorphism is not an
// eventually-constant path, so its coordinate is not an exact rational.
class UnsupportedEndpoint : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        message_(what),
        line_(line),
        column_(column) {}

  /// The message without the line:column prefix.
  const std::string& message() const noexcept { return message_; }

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::string message_;
  std::size_t line_;
  std::size_t column_;
};

}  // namespace forge
