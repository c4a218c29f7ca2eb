#pragma once

#include <stdexcept>
#include <string>

namespace tigh {

// Base class for all failures raised by the library. The CLI maps these to a
// machine-readable error line and a nonzero exit code.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (CSV rows, cube files, label ids).
struct InputError : Error {
  using Error::Error;
};

// Unknown keys, unparseable values, or out-of-range settings.
struct ConfigError : Error {
  using Error::Error;
};

// Tensor dimension mismatches detected while wiring the model.
struct ShapeError : Error {
  using Error::Error;
};

// Filesystem failures: missing files, short reads, bad magic bytes.
struct IoError : Error {
  using Error::Error;
};

// Training aborted because the loss stopped being finite.
struct DivergenceError : Error {
  using Error::Error;
};

}  // namespace tigh
