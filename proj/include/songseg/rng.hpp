// SPDX-License-Identifier: Apache-2.0
//
// Seeded RNG with a fixed bit-level contract. std:: distributions are
// implementation-defined, so every draw here is spelled out explicitly;
// identical seeds give identical streams on every platform.
#pragma once

#include <cmath>
#include <cstdint>

namespace songseg {

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t s = seed ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL);
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  // Independent child stream; the parent state is not consumed.
  Rng fork(uint64_t stream) const { return Rng(mix_seed(state_, stream)); }

  uint64_t next_u64() { return splitmix64(state_); }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive on both ends
  int uniform_int(int lo, int hi) {
    if (hi <= lo) return lo;
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  // Box-Muller
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  uint64_t state_;
};

}  // namespace songseg
