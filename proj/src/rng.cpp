#include "ocs/rng.hpp"

#include <cmath>
#include <numbers>

namespace ocs {

std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  h = mix64(h ^ (a + 0xbb67ae8584caa73bULL));
  h = mix64(h ^ (b + 0x3c6ef372fe94f82bULL));
  return h;
}

double CounterRng::normal() noexcept {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // u1 in (0, 1] keeps the logarithm finite.
  const double u1 = static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

}  // namespace ocs
