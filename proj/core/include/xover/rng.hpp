#ifndef XOVER_RNG_HPP
#define XOVER_RNG_HPP

#include <cstdint>

namespace xover {

/// Counter-based substream generator: the stream for (seed, index) is
/// independent of evaluation order, so parallel schedules cannot change
/// sampled values. splitmix64 core.
class SubstreamRng {
 public:
  SubstreamRng(std::uint64_t seed, std::uint64_t index)
      : state_(seed ^ (index * 0xD2B74407B1CE6E93ull)) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_u01() {
    return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
  }

  /// Uniform double on [lo, hi].
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_u01(); }

 private:
  std::uint64_t state_;
};

}  // namespace xover

#endif  // XOVER_RNG_HPP
