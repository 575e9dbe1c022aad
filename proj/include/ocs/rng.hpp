#pragma once

#include <cstdint>
#include <limits>

namespace ocs {

/// SplitMix64 output finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// Derives an independent stream key from a seed and two counters.
///
///   key = mix64(mix64(mix64(seed ^ K0) ^ (a + K1)) ^ (b + K2))
///
/// Used as stream(sample_index, step) for perturbation operators and with
/// fixed purpose tags elsewhere, so results never depend on scheduling.
std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept;

/// Counter-based generator: the i-th draw (i = 0, 1, ...) of a stream with
/// key `k` is mix64(k + (i + 1) * 0x9e3779b97f4a7c15). Output is fully
/// determined by (key, counter); no library distribution is involved, so
/// draws are identical across standard library implementations.
class CounterRng {
public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi].
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace ocs
