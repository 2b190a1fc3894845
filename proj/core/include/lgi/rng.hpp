#pragma once

#include <cstdint>

namespace lgi {

__extension__ using uint128_t = unsigned __int128;

/// SplitMix64 generator. Every source of randomness in the library takes an
/// explicit Rng so that runs are reproducible from a single seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 24 bits of resolution.
  float uniform() noexcept { return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f; }

  float uniform(float lo, float hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) noexcept {
    const auto span = static_cast<std::uint64_t>(static_cast<std::int64_t>(hi) - lo + 1);
    // Lemire's multiply-shift; the bias is below 2^-32 for the spans used here.
    const auto r = static_cast<std::uint64_t>((static_cast<uint128_t>(next_u64()) * span) >> 64);
    return lo + static_cast<int>(r);
  }

  bool bernoulli(float p) noexcept { return uniform() < p; }

  /// Standard normal via Box-Muller.
  float normal() noexcept;

  /// Independent child stream; advances this generator by one draw.
  Rng split() noexcept { return Rng(next_u64() ^ 0x6A09E667F3BCC909ULL); }

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace lgi
