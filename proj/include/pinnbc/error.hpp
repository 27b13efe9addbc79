#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pinnbc {

enum class ErrorKind {
  invalid_argument,
  fit_failure,
  solver_failure,
  evaluation_failure,
  training_failure,
  io_failure,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::fit_failure: return "fit-failure";
    case ErrorKind::solver_failure: return "solver-failure";
    case ErrorKind::evaluation_failure: return "evaluation-failure";
    case ErrorKind::training_failure: return "training-failure";
    case ErrorKind::io_failure: return "io-failure";
  }
  return "unknown";
}

/// Base of every error raised by the library. The kind tag is what the CLI
/// reports in its machine-readable error document.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorKind::invalid_argument, message);
}

}  // namespace pinnbc
