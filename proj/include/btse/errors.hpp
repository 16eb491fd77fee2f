// Copyright 2026 The BTSE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BTSE_ERRORS_HPP_
#define BTSE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace btse {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unsupported file content (WAV, weight bundle, JSON).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Missing, unreadable, unwritable or truncated files.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument values (rates, ranges, empty inputs).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Tensor or signal dimensions that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A name (class label, IR direction, tensor) that is not registered.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// A metric that is undefined for its inputs (silent or zero reference).
class MetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace btse

#endif  // BTSE_ERRORS_HPP_
