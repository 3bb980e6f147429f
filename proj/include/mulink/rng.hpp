#pragma once

// Deterministic, stream-splittable RNG used everywhere in the simulator.
// Every Monte-Carlo unit of work (drop, slot, RE, table point, ...) draws
// from a stream derived from the master seed and the unit's logical id,
// so results are byte-identical regardless of the worker count.

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>

namespace mulink {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// xoshiro256++ core seeded through SplitMix64.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : state_) w = detail::splitmix64(x);
  }

  // Derive an independent stream from a master seed and a logical path,
  // e.g. derive(seed, {kStreamChannel, drop, slot, re}).
  static RngStream derive(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t x = master;
    std::uint64_t h = detail::splitmix64(x);
    for (std::uint64_t p : path) {
      x ^= p * 0x9e3779b97f4a7c15ULL;
      h ^= detail::splitmix64(x);
    }
    return RngStream(h);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
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
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    // Rejection-free multiply-shift; bias is negligible for n << 2^64.
    return static_cast<std::uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; consumes exactly two uniforms per pair.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // CN(0, 1): unit total variance, i.e. each axis N(0, 1/2).
  std::complex<double> cnormal() {
    const double s = 0.70710678118654752440;
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Stream purpose tags; keep values stable so seeds reproduce across versions.
enum StreamTag : std::uint64_t {
  kStreamChannel = 1,
  kStreamNoise = 2,
  kStreamPayload = 3,
  kStreamBmdrMc = 4,
  kStreamTableCer = 5,
  kStreamTableMi = 6,
  kStreamAbstraction = 7,
  kStreamCodeGen = 8,
  kStreamMixture = 9,
  kStreamPredictor = 10,
  kStreamEstError = 11,
};

}  // namespace mulink
