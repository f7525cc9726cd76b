#pragma once

#include <stdexcept>
#include <string>

namespace cargo {

// Mirrors cargo_status in cargo.h; values must stay in sync.
enum class Status : int {
  ok = 0,
  invalid_argument = 1,
  dimension_mismatch = 2,
  not_positive_definite = 3,
  eigensolver_failure = 4,
  parse_error = 5,
  io_error = 6,
  not_converged = 7,
  internal = 8,
};

class Error : public std::runtime_error {
public:
  Error(Status status, const std::string& what)
      : std::runtime_error(what), status_(status) {}
  Status status() const noexcept { return status_; }

private:
  Status status_;
};

class InvalidArgument : public Error {
public:
  explicit InvalidArgument(const std::string& what)
      : Error(Status::invalid_argument, what) {}
};

class DimensionMismatch : public Error {
public:
  explicit DimensionMismatch(const std::string& what)
      : Error(Status::dimension_mismatch, what) {}
};

// Raised when a Cholesky factorization fails. For solver iterates this means
// an iterate left the feasible cone, which the eigenvalue floor rules out.
class NotPositiveDefinite : public Error {
public:
  explicit NotPositiveDefinite(const std::string& what)
      : Error(Status::not_positive_definite, what) {}
};

class EigensolverFailure : public Error {
public:
  explicit EigensolverFailure(const std::string& what)
      : Error(Status::eigensolver_failure, what) {}
};

class ParseError : public Error {
public:
  explicit ParseError(const std::string& what) : Error(Status::parse_error, what) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error(Status::io_error, what) {}
};

}  // namespace cargo
