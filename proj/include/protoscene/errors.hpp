// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace protoscene {

/// Base class for errors caused by bad user input (files, flags, configs).
/// The CLI maps these to exit code 1; anything else is an internal error.
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric argument lies outside its allowed domain.
class ParameterError : public UserError {
 public:
  using UserError::UserError;
};

/// A function was called on input it is undefined for (e.g. empty clouds).
class DomainError : public UserError {
 public:
  using UserError::UserError;
};

/// Malformed file or config content.
class FormatError : public UserError {
 public:
  using UserError::UserError;
};

}  // namespace protoscene
