#pragma once

#include <stdexcept>
#include <string>

namespace gapsched {

// Raised when a non-finite loss or gradient is observed. A training loop
// catches it and flags the run as diverged instead of aborting the harness.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gapsched
