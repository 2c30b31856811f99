#pragma once

#include <stdexcept>
#include <string>

namespace specmix {

// I/O and container failures. CLI maps these to exit code 4.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnreadableFileError : IoError {
  using IoError::IoError;
};
struct FileDimensionError : IoError {
  using IoError::IoError;
};
struct NonFiniteValueError : IoError {
  using IoError::IoError;
};

// Bad parameters, shapes or documents. CLI maps these to exit code 2.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Failures of the numerical algorithms themselves. CLI exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ComponentCollapseError : NumericalError {
  using NumericalError::NumericalError;
};
struct InfeasibleConstraintsError : NumericalError {
  using NumericalError::NumericalError;
};
struct SingularMatrixError : NumericalError {
  using NumericalError::NumericalError;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

// Internal consistency check that survives NDEBUG builds.
inline void internal_check(bool cond, const char* msg) {
  if (!cond) throw std::logic_error(std::string("internal: ") + msg);
}

}  // namespace specmix
