/*
 * Copyright 2026 The MTDML Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MTDML_ERROR_HPP_
#define MTDML_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace mtdml {

// Base class of every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or vector shapes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An operation was invoked on an object in the wrong state (e.g. backward
// without a forward cache).
class StateError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid user-supplied configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite value produced during a computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Zero-norm vectors or zero-variance features.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; message carries row/column coordinates.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Requested quantity needs information the inputs do not carry (ground
// truth, both treatment arms, ...).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mtdml

#endif  // MTDML_ERROR_HPP_
