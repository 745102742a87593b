#pragma once

#include <stdexcept>

namespace comve {

// Bad inputs: malformed files, violated invariants, mismatched id sets.
// Maps to CLI exit code 1.
struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An external process broke its protocol (wrong line count, non-zero
// exit, closed stream). Maps to CLI exit code 2.
struct contract_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace comve
