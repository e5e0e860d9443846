#pragma once

#include <stdexcept>
#include <string>

namespace madm {

/// Thrown when a truncated series hits its term cap before the stopping
/// rule fires. Callers that expect slowly converging series (gamma close
/// to 1) should raise TruncationPolicy::max_terms.
class NonConvergenceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Thrown by the truncated-generator builder when (m_cap+1)^N exceeds the
/// hard state-count guard.
class StateSpaceTooLargeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace madm
