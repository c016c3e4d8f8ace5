// Copyright 2026 The Dynaware Authors
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

#ifndef DYNAWARE_COMMON_ERROR_H_
#define DYNAWARE_COMMON_ERROR_H_

#include <stdexcept>
#include <string>

namespace dynaware {

// Invalid configuration: bad ranges, dimension mismatches, unknown keys.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A non-finite value reached a place where it must not exist.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse, e.g. running backward on a consumed or stale graph.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Failure of a training procedure (dataset too small, divergence).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dynaware

#endif  // DYNAWARE_COMMON_ERROR_H_
