// Copyright 2026 The Clause Arena Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CLAUSE_ARENA_RANDOM_H_
#define CLAUSE_ARENA_RANDOM_H_

#include <cstdint>
#include <random>

namespace clause_arena {

// The engine is fully specified by the standard; the distributions below are
// written out by hand because libstdc++/libc++ distributions are not required
// to produce identical streams.
using Rng = std::mt19937_64;

inline constexpr const char* kRngAlgorithm = "mt19937_64";

// Uniform integer in [0, n). n must be positive.
inline uint64_t UniformInt(Rng& rng, uint64_t n) {
  const uint64_t limit = Rng::max() - (Rng::max() % n);
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Uniform integer in [lo, hi].
inline int UniformInt(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(UniformInt(rng, static_cast<uint64_t>(hi - lo + 1)));
}

// Uniform real in [0, 1) with 53 random bits.
inline double UniformReal(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double UniformReal(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * UniformReal(rng);
}

inline bool CoinFlip(Rng& rng) { return (rng() >> 63) != 0; }

// SplitMix64 finalizer; used to derive independent sub-seeds from one seed.
inline uint64_t MixSeed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace clause_arena

#endif  // CLAUSE_ARENA_RANDOM_H_
