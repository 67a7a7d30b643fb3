#pragma once

// Counter-based random streams.
//
// Every Poisson family of the graphical construction owns its own named
// stream, keyed by (seed, family, index). Two runs that share the seed but
// differ only in the bulk streams therefore see identical skeleton clocks.

#include <array>
#include <cmath>
#include <cstdint>

namespace ssep::rng {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32-10 block function (Salmon et al., SC'11).
constexpr PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) noexcept {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

/// Stream families. Values are part of the reproducibility contract.
enum class Family : std::uint32_t {
  Site1 = 1,      // Ξ¹: recolour / resample at site 1
  SiteN = 2,      // Ξᴺ: recolour / resample at site N
  Green = 3,      // Ξᴳ_i: exchanges involving a green individual
  BulkRB = 4,     // Ξᴮᴿ_i: exchanges between non-green individuals
  ResampleLeft = 5,
  ResampleRight = 6,
  XiBlue = 7,     // ξᴮ ~ Ber(p)^N
  XiGreen = 8,    // ξᴳ ~ Ber(q)^N
  Walk = 9,
  Misc = 10,
};

/// Seed of replica `replica` under master seed `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replica) noexcept {
  const auto out = philox4x32({static_cast<std::uint32_t>(replica), static_cast<std::uint32_t>(replica >> 32),
                               0xFFFFFFFFu, 0xFFFFFFFFu},
                              {static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32)});
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

class Stream {
 public:
  Stream(std::uint64_t seed, Family family, std::uint32_t index) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        family_(static_cast<std::uint32_t>(family)),
        index_(index) {}

  std::uint64_t next_u64() noexcept {
    if (pos_ == 2) refill();
    return buffer_[pos_++];
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  void refill() noexcept {
    const auto out = philox4x32({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                 index_, family_},
                                key_);
    ++block_;
    buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    pos_ = 0;
  }

  PhiloxKey key_;
  std::uint32_t family_;
  std::uint32_t index_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int pos_ = 2;
};

}  // namespace ssep::rng
