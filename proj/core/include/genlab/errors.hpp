#pragma once

#include <stdexcept>
#include <string>

namespace genlab {

// Violated precondition on an argument (bad range, wrong kind, invalid structure).
class ContractError : public std::invalid_argument {
 public:
  explicit ContractError(const std::string& what) : std::invalid_argument(what) {}
};

// Operand shapes are incompatible.
class DimensionError : public ContractError {
 public:
  explicit DimensionError(const std::string& what) : ContractError(what) {}
};

// Non-finite values, divergence, failed convergence, singular systems.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

}  // namespace genlab
