#pragma once

#include <cstdint>

namespace hyperfractal {

// Deterministic random source used by every stochastic component.
//
// xoshiro256** seeded through splitmix64.  Hand-rolled on purpose: the
// standard <random> distributions are implementation-defined, and the suite
// promises byte-identical outputs for a given (seed, replication) pair on any
// platform.  Streams for Monte-Carlo replications are derived from the master
// seed and the replication index, so replications can run in any order or in
// parallel without sharing state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = split_mix(x);
  }

  // Independent stream for one replication of a seeded experiment.
  static Rng for_replication(std::uint64_t master_seed, std::uint64_t replication) {
    std::uint64_t x = master_seed;
    std::uint64_t a = split_mix(x);
    x = replication + 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = split_mix(x);
    return Rng(a ^ (b + 0x2545f4914f6cdd1dULL));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, bound); bound > 0.  Rejection sampling keeps the
  // draw unbiased.
  std::int64_t uniform_int(std::int64_t bound) {
    const std::uint64_t n = static_cast<std::uint64_t>(bound);
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t draw;
    do {
      draw = next_u64();
    } while (draw >= limit);
    return static_cast<std::int64_t>(draw % n);
  }

  // +1 or -1 with equal probability.
  int direction() { return (next_u64() >> 63) ? 1 : -1; }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }

  static std::uint64_t split_mix(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_[4];
};

}  // namespace hyperfractal
