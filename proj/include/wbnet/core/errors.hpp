#pragma once

#include <stdexcept>
#include <string>

namespace wbnet {

// Error families. The CLI maps each one onto a distinct exit code.

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised for solver failures, non-finite losses and similar numerical breakdowns.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace wbnet
