// Copyright 2026 The ope Authors.
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

#ifndef OPE_RANDOM_HPP
#define OPE_RANDOM_HPP

#include <cstdint>
#include <initializer_list>

namespace ope {

/// SplitMix64 finalizer; a bijective avalanche mix of 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31U);
}

/// Hashes a master seed and a path of counters into an independent sub-seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t state = mix64(seed);
  for (const auto step : path) {
    state = mix64(state ^ mix64(step + 0x632be59bd9b4e019ULL));
  }
  return state;
}

/// Counter-based uniform stream: draw `i` depends only on (key, i), never on draw order.
class CounterStream {
 public:
  constexpr explicit CounterStream(std::uint64_t key) noexcept : key_(key) {}

  /// Uniform double in [0, 1) with 53 random bits.
  [[nodiscard]] constexpr double uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(mix64(key_ + counter * 0xd1b54a32d192ed03ULL) >> 11U) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
};

}  // namespace ope

#endif
