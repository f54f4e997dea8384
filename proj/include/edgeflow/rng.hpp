#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace edgeflow {

// SplitMix64. Chosen over std::mt19937_64 because the standard library only
// pins the engine, not the distributions; this generator plus the explicit
// conversions below give the same stream on every platform, which is part of
// the reproducibility contract for workload generation.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Box-Muller, cosine branch only; one uniform is shifted away from zero so
  // the log argument is always positive.
  double next_gaussian() {
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

// FNV-1a, used to derive independent substreams from string tags.
inline std::uint64_t hash_tag(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::uint64_t index = 0) {
  SplitMix64 mix(base ^ hash_tag(tag) ^ (index * 0x9e3779b97f4a7c15ULL));
  return mix.next_u64();
}

}  // namespace edgeflow
