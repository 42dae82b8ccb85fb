#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace o2nc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Bad arguments to a public operation (dimension mismatch, empty input, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid experiment or hyperparameter configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A component broke its contract at runtime, e.g. a learner left the ball.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace o2nc
