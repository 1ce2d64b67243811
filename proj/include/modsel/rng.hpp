#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace modsel {

// SplitMix64 (Steele, Lea & Flood 2014; the java.util.SplittableRandom
// mixer). Counter-based: state advances by a fixed odd constant and each
// output is a bijective hash of the counter, so streams can be derived by
// hashing rather than by jumping. Gaussians come from Box-Muller on two
// 53-bit uniforms. Everything here is exactly reproducible from the seed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  // SplitMix64 finalizer: bijective 64-bit mix.
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t next_u64() { return mix(state_ += kGamma); }

  // Uniform on [0, 1) with 53 random mantissa bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the paired draw is cached.
  double next_gaussian() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = 1.0 - next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

// Derives an independent stream seed from a base seed and a path of
// identifiers (e.g. {T, replication}). Each step absorbs one component
// through the SplitMix64 mixer, so the result does not depend on the order
// in which streams are consumed, only on the path values.
inline std::uint64_t derive_stream(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = SplitMix64::mix(base + SplitMix64::kGamma);
  for (std::uint64_t v : path) {
    s = SplitMix64::mix(s ^ (v + SplitMix64::kGamma + (s << 6) + (s >> 2)));
  }
  return s;
}

}  // namespace modsel
