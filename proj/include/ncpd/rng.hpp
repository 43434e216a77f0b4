#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ncpd {

/// SplitMix64 finalizer. Used as a counter-based generator: the n-th draw of
/// stream (seed, key) is mix(seed, key, n), so any draw can be reproduced
/// without replaying the stream.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t key) noexcept
      : base_(splitmix64(seed ^ splitmix64(key + 0x632be59bd9b4e019ULL))) {}

  constexpr std::uint64_t at(std::uint64_t counter) const noexcept {
    return splitmix64(base_ + counter * 0xd1b54a32d192ed03ULL);
  }

  std::uint64_t next() noexcept { return at(counter_++); }

  /// Uniform in the open interval (0, 1), 53-bit resolution.
  double uniform_open() noexcept {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n) by rejection, n >= 1.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
      r = next();
    } while (r >= limit);
    return r % n;
  }

  /// Standard normal via Box-Muller (cosine branch only).
  double normal() noexcept {
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

}  // namespace ncpd
