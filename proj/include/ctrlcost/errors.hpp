#pragma once

#include <stdexcept>
#include <string>

namespace ctrlcost {

// Precondition or parameter violation detected before any numerics run.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A computation that could not reach a trustworthy result.
struct ComputationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& message) {
  if (!ok) throw InputError(message);
}

}  // namespace ctrlcost
