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

#ifndef DYNAWARE_COMMON_RNG_H_
#define DYNAWARE_COMMON_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace dynaware {

// Derives an independent 64-bit seed for a named substream of a root seed.
// Every random quantity in the stack is drawn from a stream obtained this way
// so that runs are reproducible and streams never alias.
uint64_t DeriveSeed(uint64_t root, std::string_view stream, uint64_t index = 0);

class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi); returns lo exactly when lo == hi.
  double Uniform(double lo, double hi) {
    if (lo == hi) return lo;
    return lo + (hi - lo) * Uniform();
  }

  double Normal() { return normal_(engine_); }

  // Index in [0, n).
  uint64_t Index(uint64_t n) { return engine_() % n; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace dynaware

#endif  // DYNAWARE_COMMON_RNG_H_
