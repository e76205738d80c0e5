// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace mrs {

/// Labels that keep the random draws of one trial in separate substreams.
enum class Stream : std::uint64_t {
  channel = 1,
  symbols = 2,
  pilot_noise = 3,
  baseline_pilot_noise = 4,
};

namespace detail {
inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Counter-based generator: the i-th output is mix64(key + (i+1)*golden),
/// where the key hashes (master seed, trial index, stream label). Draws of a
/// trial therefore never depend on which worker runs it or in what order.
class Substream {
 public:
  Substream(std::uint64_t seed, std::uint64_t trial, Stream label)
      : key_(detail::mix64(detail::mix64(detail::mix64(seed) ^ (trial + detail::kGolden)) ^
                           (static_cast<std::uint64_t>(label) * detail::kGolden))) {}

  std::uint64_t next_u64() {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGolden);
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform phase in [0, 2 pi).
  double phase() { return 2.0 * std::numbers::pi * uniform(); }

  /// Circularly symmetric complex Gaussian with E|z|^2 = variance
  /// (|z|^2 exponential, phase uniform).
  std::complex<double> cscg(double variance = 1.0) {
    const double r = std::sqrt(-variance * std::log1p(-uniform()));
    return std::polar(r, phase());
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mrs
