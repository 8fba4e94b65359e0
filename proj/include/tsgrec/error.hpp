/*
 * Copyright 2026 The tsgrec Authors.
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

#ifndef TSGREC_ERROR_HPP_
#define TSGREC_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace tsgrec {

// Broad failure class. Values line up with the C API status codes and the
// CLI exit codes.
enum class ErrorKind {
  kInvalidArgument = 1,
  kData = 2,
  kModel = 3,
  kInternal = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Bad caller input: wrong shapes, out-of-range parameters, broken
// preconditions.
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorKind::kInvalidArgument, what) {}
};

// Malformed or inconsistent input data (event logs, graphs, blacklists).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

// Checkpoint problems and training failures.
class ModelError : public Error {
 public:
  explicit ModelError(const std::string& what)
      : Error(ErrorKind::kModel, what) {}
};

}  // namespace tsgrec

#endif  // TSGREC_ERROR_HPP_
