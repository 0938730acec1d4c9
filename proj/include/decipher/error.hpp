// Copyright 2026 The decipher Authors
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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace decipher {

/// Malformed or missing input data (bad encoding, unknown words, empty files).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration values or inconsistent shapes.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A non-finite value appeared during training. `tensor()` names the culprit.
class NumericError : public std::runtime_error {
 public:
  NumericError(std::string tensor, const std::string& what)
      : std::runtime_error(what), tensor_(std::move(tensor)) {}
  const std::string& tensor() const noexcept { return tensor_; }

 private:
  std::string tensor_;
};

/// The flow network cannot carry the requested demand.
class SolverError : public std::runtime_error {
 public:
  SolverError(std::int64_t max_flow, const std::string& what)
      : std::runtime_error(what), max_flow_(max_flow) {}
  std::int64_t max_feasible_flow() const noexcept { return max_flow_; }

 private:
  std::int64_t max_flow_;
};

}  // namespace decipher
