#pragma once

#include <stdexcept>
#include <string>

namespace regkit {

/// Bad input such as a malformed file or an out-of-range flag. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A factorization broke down or training diverged.
/// Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

} // namespace regkit
