#pragma once

#include <cstdint>
#include <initializer_list>

namespace instseg {

// Counter-based deterministic RNG: a stream is keyed by a tuple of 64-bit
// values (seed, stream tag, instance id, point id, ...) so independent
// entities can be generated in any order, or in parallel, with identical
// results. Based on the splitmix64 finalizer.
class StreamRng {
 public:
  explicit StreamRng(std::initializer_list<std::uint64_t> keys) {
    state_ = 0x9e3779b97f4a7c15ULL;
    for (std::uint64_t k : keys) state_ = mix(state_ ^ (k + 0x9e3779b97f4a7c15ULL));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Uniform integer in [0, n) via multiply-shift; n > 0.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace instseg
