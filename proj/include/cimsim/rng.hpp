#pragma once

// Keyed, stateless-stream RNG. Every random draw in the simulator is derived
// from an explicit key (seed + stream tag + indices), never from shared
// mutable state, so results are bit-identical no matter how loops are split
// across threads and do not depend on the C++ standard library in use.

#include <cmath>
#include <cstdint>

namespace cimsim {

// splitmix64 finalizer (Steele, Lea, Flood). Bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream tags keep unrelated consumers of the same seed decorrelated.
enum class StreamTag : std::uint64_t {
  kCellGain = 0x01,
  kPlaneGain = 0x02,
  kConversionNoise = 0x03,
  kTrialInput = 0x04,
  kDatInput = 0x05,
  kProbTrial = 0x06,
  kPredictSignal = 0x07,
  kNetTrial = 0x08,
};

constexpr std::uint64_t derive_key(std::uint64_t seed, StreamTag tag,
                                   std::uint64_t a = 0, std::uint64_t b = 0,
                                   std::uint64_t c = 0) {
  std::uint64_t h = mix64(seed ^ static_cast<std::uint64_t>(tag));
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  return h;
}

// Small counter-based generator seeded from a derived key.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : state_(key) {}
  Rng(std::uint64_t seed, StreamTag tag, std::uint64_t a = 0,
      std::uint64_t b = 0, std::uint64_t c = 0)
      : state_(derive_key(seed, tag, a, b, c)) {}

  std::uint64_t next_u64() {
    counter_++;
    return mix64(state_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform in [0, bound). Fixed-point multiply; bias is O(bound/2^64).
  std::uint64_t next_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. u1 is nudged into (0, 1] for the log.
  double next_gaussian() {
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925287 * u2);
  }

 private:
  std::uint64_t state_;
  std::uint64_t counter_ = 0;
};

}  // namespace cimsim
