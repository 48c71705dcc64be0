#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace kenv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Bad user input: unreadable file, malformed flag, nonsense parameter.
/// CLI exit code 2.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Structurally valid input that violates a documented precondition
/// (duplicate sites, non-positive lengthscale, shape mismatch).
/// CLI exit code 2.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Gram matrix numerically singular / too ill-conditioned for the
/// requested precision.  Carries the offending pivot index when known.
/// CLI exit code 2.
struct ConditioningError : std::runtime_error {
  int pivot_index = -1;
  explicit ConditioningError(const std::string& msg, int pivot = -1)
      : std::runtime_error(msg), pivot_index(pivot) {}
};

/// A mathematical assumption of the bounds does not hold for the given
/// data (norm budget exceeded, empty envelope intersection).
/// CLI exit code 3.
struct AssumptionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An iterative solver failed to reach its tolerance within the cap.
/// CLI exit code 4.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kenv
