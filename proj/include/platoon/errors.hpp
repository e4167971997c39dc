#pragma once

#include <stdexcept>
#include <string>

namespace platoon {

// Malformed files, bad ids, violated input invariants. Maps to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deadlines that cannot be met, empty feasible sets. Maps to exit code 1.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace platoon
