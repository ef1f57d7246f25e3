#pragma once

#include <stdexcept>
#include <string>

namespace lbpwht {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operand dimensions do not compose.
struct ShapeError : Error {
  using Error::Error;
};

// Malformed tensor file or JSON document.
struct FormatError : Error {
  using Error::Error;
};

// Invalid configuration or flag value.
struct ConfigError : Error {
  using Error::Error;
};

// Training produced a non-finite loss.
struct DivergenceError : Error {
  using Error::Error;
};

}  // namespace lbpwht
