#pragma once

#include <cstdint>
#include <limits>

namespace xps {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based random stream keyed by (seed, index, stream).
///
/// The stream for a given key is independent of how work is partitioned, so
/// shot `i` draws the same numbers regardless of which worker runs it.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0)
      : key_(splitmix64(splitmix64(seed) ^ splitmix64(index ^ (stream << 56) ^ 0x5bd1e995ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return splitmix64(key_ + 0x632be59bd9b4e019ULL * ++counter_); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace xps
