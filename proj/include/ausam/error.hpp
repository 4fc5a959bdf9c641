#pragma once

#include <stdexcept>
#include <string>

namespace ausam {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or argument; maps to CLI exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Feature/parameter length does not match the model.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced inside a model; the message names the layer.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Gradient too small to normalize into a perturbation.
class ZeroGradient : public Error {
 public:
  using Error::Error;
};

// Malformed or unreadable file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace ausam
