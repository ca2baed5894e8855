#pragma once

#include <stdexcept>
#include <string>

namespace wavenet {

enum class ErrorKind {
  InvalidParameter,
  Dimension,
  State,
  Configuration,
  Data,
  Format,
  NoFit,
  Divergence,
};

const char* to_string(ErrorKind kind);

/// Base for every error thrown by the library. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Thrown when the least-squares inversion of the filter map cannot reach the
/// requested residual. Carries the best residual seen over all restarts.
class NoFitError : public Error {
 public:
  NoFitError(const std::string& what, double best_residual)
      : Error(ErrorKind::NoFit, what), best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

}  // namespace wavenet
