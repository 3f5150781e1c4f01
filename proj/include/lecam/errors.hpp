#pragma once

#include <stdexcept>
#include <string>

namespace lecam {

/// Two objects that must live over the same finite space do not.
class SpaceMismatch : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input: non-stochastic columns, bad sizes, unknown labels.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The LP solver reached a state that cannot occur for a well-posed
/// deficiency problem (infeasible, unbounded or out of iterations).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lecam
