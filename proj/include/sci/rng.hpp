#pragma once

#include <cmath>
#include <cstdint>

// Seedable RNG with cheap independent substreams.
//
// Mask sampling runs one substream per chain (per frame, per pixel, or per
// trial), so results do not depend on the order chains are visited.  Stream
// seeds are derived by hashing (base_seed, stream_id) through splitmix64;
// the per-stream generator is a minimal PCG32.

namespace sci {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Hash a (base, stream) pair into a stream seed.  Distinct pairs give
// unrelated seeds; same pair always gives the same seed.
inline std::uint64_t substream_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t s = base;
  std::uint64_t h = splitmix64_next(s);
  s = h ^ (stream + 0x9e3779b97f4a7c15ull);
  h = splitmix64_next(s);
  return h;
}

// Three-way variant used for (seed, axis value, trial) style derivations.
inline std::uint64_t substream_seed(std::uint64_t base, std::uint64_t a,
                                    std::uint64_t b) {
  return substream_seed(substream_seed(base, a), b);
}

class Pcg32 {
 public:
  explicit Pcg32(std::uint64_t seed, std::uint64_t seq = 0xda3e39cb94b95bdbull)
      : state_(0), inc_((seq << 1u) | 1u) {
    next_u32();
    state_ += seed;
    next_u32();
  }

  std::uint32_t next_u32() {
    std::uint64_t old = state_;
    state_ = old * 6364136223846793005ull + inc_;
    std::uint32_t xorshifted =
        static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  std::uint64_t next_u64() {
    std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform double in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  // Uniform double in [lo, hi).
  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Standard normal via the Box-Muller cosine branch.  No spare caching so a
  // stream's output is a pure function of its draw count.
  double next_gaussian() {
    double u1 = next_double();
    double u2 = next_double();
    // avoid log(0)
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

}  // namespace sci
