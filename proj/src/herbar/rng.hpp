#pragma once

#include <cstdint>

namespace herbar {

// xorshift64* generator. Shared by the descriptor sampling pattern and RANSAC
// so that sequences are reproducible across platforms.
class XorShift64Star {
 public:
  static constexpr std::uint64_t kDefaultSeed = 0x9E3779B97F4A7C15ULL;

  explicit XorShift64Star(std::uint64_t seed = kDefaultSeed) noexcept
      : state_(seed == 0 ? kDefaultSeed : seed) {}

  std::uint64_t next() noexcept {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 2685821657736338717ULL;
  }

  // Uniform-ish integer in [0, bound). Modulo bias is irrelevant at our bounds.
  std::uint64_t below(std::uint64_t bound) noexcept { return next() % bound; }

  // Uniform double in [0, 1).
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace herbar
