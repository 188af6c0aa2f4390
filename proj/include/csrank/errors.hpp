// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace csrank {

// Base for everything the library throws. The CLI maps each subclass to an
// exit code: config 2, data 3, numeric 4.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad configuration, bad path, unreadable or malformed file.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Input data that cannot support the requested computation (single-class
// sets, empty splits, out-of-vocabulary ids, dimension mismatches).
class DataError : public Error {
public:
  using Error::Error;
};

// Non-finite loss or gradient.
class NumericError : public Error {
public:
  using Error::Error;
};

} // namespace csrank
