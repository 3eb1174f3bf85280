// Copyright 2026 The dpspec Authors
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

#ifndef DPSPEC_RNG_H_
#define DPSPEC_RNG_H_

#include <cstdint>
#include <utility>
#include <vector>

#include "absl/strings/string_view.h"
#include "dpspec/rational.h"

namespace dpspec {

inline uint64_t SplitMix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// FNV-1a, 64-bit.
inline uint64_t Fnv1a64(absl::string_view bytes) {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// xoshiro256** stream. All draws are built from raw 64-bit outputs with
// explicit rejection sampling, so results do not depend on the standard
// library's distribution implementations.
class RandomStream {
 public:
  explicit RandomStream(uint64_t seed) {
    uint64_t sm = seed;
    for (uint64_t& word : s_) word = SplitMix64(sm);
  }

  // Independent substream keyed by (seed, label).
  static RandomStream Derive(uint64_t seed, absl::string_view label) {
    uint64_t mixed = seed;
    uint64_t a = SplitMix64(mixed);
    return RandomStream(a ^ Fnv1a64(label));
  }

  uint64_t Next() {
    const uint64_t result = Rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = Rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, n), n > 0.
  uint64_t UniformBelow(uint64_t n) {
    // Lemire's multiply-and-reject.
    uint64_t x = Next();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
    uint64_t low = static_cast<uint64_t>(m);
    if (low < n) {
      const uint64_t threshold = -n % n;
      while (low < threshold) {
        x = Next();
        m = static_cast<unsigned __int128>(x) * n;
        low = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  // Uniform on [0, n) for arbitrary-precision n > 0.
  BigInt UniformBelow(const BigInt& n) {
    if (mpz_fits_ulong_p(n.get_mpz_t())) {
      return BigInt(std::to_string(UniformBelow(uint64_t{n.get_ui()})));
    }
    const size_t bits = mpz_sizeinbase(n.get_mpz_t(), 2);
    while (true) {
      BigInt candidate = 0;
      for (size_t got = 0; got < bits; got += 64) {
        candidate <<= 64;
        candidate += BigInt(std::to_string(Next()));
      }
      mpz_fdiv_r_2exp(candidate.get_mpz_t(), candidate.get_mpz_t(), bits);
      if (candidate < n) return candidate;
    }
  }

  // Exact Bernoulli(p) for rational p in [0, 1].
  bool Bernoulli(const Rational& p) {
    if (p <= 0) return false;
    if (p >= 1) return true;
    return UniformBelow(BigInt(p.get_den())) < p.get_num();
  }

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(UniformBelow(uint64_t{i}));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  static uint64_t Rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t s_[4];
};

}  // namespace dpspec

#endif  // DPSPEC_RNG_H_
