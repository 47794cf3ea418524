#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace workbench {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied arguments that violate a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A factorization or linear solve failed even after jitter escalation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// An iterative solver stopped before reaching its tolerance.
class NotConverged : public Error {
 public:
  NotConverged(const std::string& what, std::size_t iterations, double grad_norm)
      : Error(what + " (iterations=" + std::to_string(iterations) +
              ", grad_norm=" + std::to_string(grad_norm) + ")"),
        iterations_(iterations),
        grad_norm_(grad_norm) {}

  std::size_t iterations() const noexcept { return iterations_; }
  double grad_norm() const noexcept { return grad_norm_; }

 private:
  std::size_t iterations_;
  double grad_norm_;
};

// Logistic ERM diverged, which happens when the classes are separable.
class SeparationError : public Error {
 public:
  using Error::Error;
};

// Remote predictor failures. Each failure mode has its own class so callers can
// tell a dead server from a misbehaving one; none of them are retried.
class RemoteError : public Error {
 public:
  using Error::Error;
};

class TransportError : public RemoteError {
 public:
  using RemoteError::RemoteError;
};

class TimeoutError : public RemoteError {
 public:
  using RemoteError::RemoteError;
};

class ProtocolError : public RemoteError {
 public:
  using RemoteError::RemoteError;
};

class ServerError : public RemoteError {
 public:
  ServerError(int status, const std::string& message)
      : RemoteError("server returned " + std::to_string(status) + ": " + message),
        status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace workbench
