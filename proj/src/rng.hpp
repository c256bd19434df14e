#pragma once

#include <cmath>
#include <cstdint>

namespace declink {

// Deterministic substream derivation. Every random consumer owns a stream
// keyed by (root seed, role, payload a, payload b), so batches can be
// generated in any order or partitioned across workers without changing a
// single draw.
enum class Role : std::uint64_t {
  SigmaPoint = 1,
  TrainDomain = 2,
  EvalDomain = 3,
  Gains = 4,
  Estimates = 5,
  InitParams = 6,
  PretrainShuffle = 7,
  PretrainDropout = 8,
  JointShuffle = 9,
  JointDropout = 10,
};

namespace detail {
// SplitMix64 finalizer; full-avalanche mix of a 64-bit word.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}
}  // namespace detail

inline std::uint64_t derive_stream(std::uint64_t seed, Role role,
                                   std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = detail::mix64(seed);
  h = detail::mix64(h ^ detail::mix64(static_cast<std::uint64_t>(role)));
  h = detail::mix64(h ^ detail::mix64(a + 0x632be59bd9b4e019ull));
  h = detail::mix64(h ^ detail::mix64(b + 0xd6e8feb86659fd93ull));
  return h;
}

// Seeded xoshiro256++ stream with the handful of scalar draws the simulator
// needs. The generator and the scalar mappings are implemented here in
// full, so a given seed produces the same draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    // SplitMix64 expansion of the seed into the four state words.
    std::uint64_t sm = seed;
    for (std::uint64_t& word : state_) {
      sm += 0x9e3779b97f4a7c15ull;
      std::uint64_t z = sm;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t raw() {
    const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }

  // Unit-mean exponential via inverse CDF.
  double exp_unit_mean() { return -std::log1p(-uniform01()); }

  // Standard normal via Box-Muller.
  double normal01() {
    double u1 = 0.0;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Uniform integer in [0, n); n is tiny relative to 2^64, so the modulo
  // bias is negligible.
  std::uint64_t below(std::uint64_t n) { return raw() % n; }

 private:
  std::uint64_t state_[4];
};

}  // namespace declink
