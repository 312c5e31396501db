#pragma once

#include <stdexcept>
#include <string>

namespace opca {

// An eigendecomposition or other numeric kernel failed to produce a usable
// result (non-convergence, exhausted iteration guard, infeasible state).
class NumericFailure : public std::runtime_error {
 public:
  explicit NumericFailure(const std::string& what) : std::runtime_error(what) {}
};

// The requested algorithm/regime/mode combination has no closed form
// (e.g. a budget-mode bound for gradient descent).
class UnsupportedCombination : public std::invalid_argument {
 public:
  explicit UnsupportedCombination(const std::string& what)
      : std::invalid_argument(what) {}
};

// An adversary was asked for another loss after emitting its end marker.
class SequenceExhausted : public std::runtime_error {
 public:
  explicit SequenceExhausted(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace opca
