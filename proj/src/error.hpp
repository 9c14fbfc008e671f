#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace depolar {

enum class ErrorCode {
  io = 1,
  format = 2,
  argument = 3,
  range = 4,
  index = 5,
  convergence = 6,
  capability = 7,
  model = 8,
  divergence = 9,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when an iterative solve hits its iteration cap. Carries the best
/// iterate so callers can inspect how far the solve got.
class ConvergenceError : public Error {
 public:
  ConvergenceError(std::string message, std::vector<double> best_iterate,
                   double residual, long long iterations)
      : Error(ErrorCode::convergence, std::move(message)),
        best_iterate_(std::move(best_iterate)),
        residual_(residual),
        iterations_(iterations) {}

  const std::vector<double>& best_iterate() const noexcept { return best_iterate_; }
  double residual() const noexcept { return residual_; }
  long long iterations() const noexcept { return iterations_; }

 private:
  std::vector<double> best_iterate_;
  double residual_;
  long long iterations_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace depolar
