// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace tagm {

/// Raised for every contract violation detected at a public boundary
/// (shape mismatch, out-of-range label, corrupt file, divergence).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape/dimension mismatch between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated file, bad magic, unsupported version.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or gradient encountered during optimisation.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace tagm
