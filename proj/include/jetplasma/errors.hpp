#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jetplasma {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax error while parsing a field expression. `offset` is a byte offset
/// into the source text.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset, std::string expected)
      : Error(message), offset_(offset), expected_(std::move(expected)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::string expected_;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

class UnboundVariableError : public EvalError {
 public:
  explicit UnboundVariableError(const std::string& name)
      : EvalError("unbound variable '" + name + "'"), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class DomainError : public EvalError {
 public:
  DomainError(const std::string& what, std::string subexpression, std::string location = "")
      : EvalError(what + " in '" + subexpression + "'" + (location.empty() ? "" : " at " + location)),
        reason_(what),
        subexpression_(std::move(subexpression)),
        location_(std::move(location)) {}
  const std::string& reason() const noexcept { return reason_; }
  const std::string& subexpression() const noexcept { return subexpression_; }
  const std::string& location() const noexcept { return location_; }

 private:
  std::string reason_;
  std::string subexpression_;
  std::string location_;
};

class DegenerateMetricError : public Error {
 public:
  using Error::Error;
};

class NormalizationError : public Error {
 public:
  using Error::Error;
};

class SingularDynamicsError : public Error {
 public:
  using Error::Error;
};

class IntegrationError : public Error {
 public:
  IntegrationError(std::size_t step, const std::string& cause)
      : Error("integration aborted at step " + std::to_string(step) + ": " + cause), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ScenarioError : public Error {
 public:
  using Error::Error;
};

}  // namespace jetplasma
