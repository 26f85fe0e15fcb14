#pragma once

#include <array>
#include <cstdint>

namespace advtrade {

/// xoshiro256** seeded through splitmix64. Output depends only on the seed
/// and the call sequence, never on the platform's <random> implementation.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  /// Independent stream number `k` of master seed `seed`. Replicate k of an
  /// experiment uses stream(master, k), so it can be rerun in isolation.
  static SeededRng stream(std::uint64_t seed, std::uint64_t k);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal (Marsaglia polar method).
  double normal();

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace advtrade
