// Copyright 2026 The co2track Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace co2track {

/// Base class for every error raised by the tracker.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Telemetry.
class ProcessGone : public Error {
 public:
  using Error::Error;
};

class PermissionDenied : public Error {
 public:
  using Error::Error;
};

class TraceExhausted : public Error {
 public:
  using Error::Error;
};

// Energy accounting.
class NonMonotonicTimestamp : public Error {
 public:
  using Error::Error;
};

// Emissions.
class InvalidPue : public Error {
 public:
  using Error::Error;
};

// Session lifecycle.
class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class AlreadyRunning : public Error {
 public:
  using Error::Error;
};

class NotRunning : public Error {
 public:
  using Error::Error;
};

// Reporting.
class IoFailure : public Error {
 public:
  using Error::Error;
};

/// Malformed input. `row()` is 1-based and counts the header line; 0 when
/// the error is not tied to a specific row.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : Error(row == 0 ? what : "row " + std::to_string(row) + ": " + what),
        row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class EncryptionFailure : public Error {
 public:
  using Error::Error;
};

class DecryptFailure : public Error {
 public:
  using Error::Error;
};

// CLI.
class SpawnFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace co2track
