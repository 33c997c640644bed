#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace stealth_lqr {

/// Philox4x32-10 block function. Stateless: output is a pure
/// function of (counter, key).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Identifies one Monte Carlo path: its noise is a pure function of these two numbers.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
};

/// Standard-normal draws for one path. Draw k of the stream is determined by
/// (master_seed, path_index, k) alone, so paths can be generated in any order.
class NormalStream {
 public:
  explicit NormalStream(SeedSpec seed)
      : key_{static_cast<std::uint32_t>(seed.master_seed), static_cast<std::uint32_t>(seed.master_seed >> 32)},
        path_(seed.path_index) {}

  double next() {
    if (cursor_ == 2) refill();
    return buffer_[cursor_++];
  }

  /// Uniform in (0, 1) from a 64-bit word; 52 bits keep the largest value below 1.
  static double to_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
  }

 private:
  void refill() {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(path_ >> 32),
                                  static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32)};
    const auto out = Philox4x32::generate(ctr, key_);
    ++block_;
    const double u1 = to_unit((static_cast<std::uint64_t>(out[0]) << 32) | out[1]);
    const double u2 = to_unit((static_cast<std::uint64_t>(out[2]) << 32) | out[3]);
    // Box-Muller
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    buffer_[0] = radius * std::cos(angle);
    buffer_[1] = radius * std::sin(angle);
    cursor_ = 0;
  }

  Philox4x32::Key key_;
  std::uint64_t path_;
  std::uint64_t block_ = 0;
  std::array<double, 2> buffer_{};
  int cursor_ = 2;
};

}  // namespace stealth_lqr
