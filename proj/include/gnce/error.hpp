// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace gnce {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or configuration. The CLI maps this to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, malformed or mismatched data files. Exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values in a numeric pipeline. Exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace gnce
