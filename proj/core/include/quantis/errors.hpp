#ifndef QUANTIS_ERRORS_HPP
#define QUANTIS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace quantis {

// Invalid user input: bad config keys, out-of-domain parameters, malformed
// cache files. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Runtime numerical failure: non-convergence, degenerate objectives,
// singular systems. The CLI maps this to exit code 1.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Iteration hit its cap before reaching tolerance; carries the last residual
// so callers can decide whether the partial result is usable.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : NumericalError(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

// Every sample of the objective vanished, so the optimization surface is
// identically zero and no importance-sampling parameter can be fitted.
class DegenerateObjectiveError : public NumericalError {
 public:
  explicit DegenerateObjectiveError(const std::string& what)
      : NumericalError(what) {}
};

}  // namespace quantis

#endif
