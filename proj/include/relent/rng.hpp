#pragma once

#include <cmath>
#include <cstdint>

namespace relent {

namespace detail {

/// splitmix64 finalizer; good 64->64 bit mixer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Map to (0,1); the +2^-54 offset keeps logs finite.
inline double to_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

}  // namespace detail

/// xoshiro256++ with splitmix64 seeding. Self-contained so that streams are
/// reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) {
      sm += 0x9E3779B97F4A7C15ULL;
      std::uint64_t z = sm;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      w = z ^ (z >> 31);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in (0,1).
  double uniform01() { return detail::to_unit(next()); }

  /// Standard normal (Box-Muller; no cached spare, two uniforms per call).
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

/// Counter-based standard normal, keyed by (seed, walker, step, coordinate).
/// Purely functional: the value never depends on evaluation order, so ensemble
/// propagation is reproducible for any work split across threads or workers.
inline double counter_normal(std::uint64_t seed, std::uint64_t walker, std::uint64_t step,
                             std::uint64_t coord) {
  using detail::mix64;
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ walker);
  h = mix64(h ^ step);
  h = mix64(h ^ coord);
  const double u1 = detail::to_unit(h);
  const double u2 = detail::to_unit(mix64(h ^ 0xA5A5A5A5A5A5A5A5ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

/// Counter-based uniform in (0,1); same keying scheme as counter_normal.
inline double counter_uniform(std::uint64_t seed, std::uint64_t walker, std::uint64_t step,
                              std::uint64_t coord) {
  using detail::mix64;
  std::uint64_t h = mix64(seed ^ 0x5DEECE66DULL);
  h = mix64(h ^ walker);
  h = mix64(h ^ step);
  h = mix64(h ^ coord);
  return detail::to_unit(h);
}

}  // namespace relent
