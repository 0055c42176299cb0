#pragma once

#include <cstdint>
#include <string_view>

namespace prnn {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Order-sensitive hash of a seed with further 64-bit words.
std::uint64_t hash_seed(std::uint64_t seed, std::uint64_t a);
std::uint64_t hash_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);
std::uint64_t hash_seed(std::uint64_t seed, std::string_view name);

/// Counter-based generator: the i-th output is mix64(key + (i + 1) * golden).
/// Fully specified integer arithmetic, so the stream is identical on every
/// platform. Distribution helpers are implemented here rather than via
/// <random> distributions, whose outputs are implementation-defined.
class CounterRng {
 public:
  static constexpr std::string_view kName = "splitmix64-counter";

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (one draw per call; the pair partner is discarded).
  double normal();

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace prnn
