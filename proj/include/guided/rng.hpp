#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace guided {

/// Philox4x32-10 counter-based generator. A (seed, stream) pair selects an
/// independent substream, so parallel chunks reproduce bit for bit no matter
/// which worker runs them.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        ctr_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

  std::uint64_t next_u64() noexcept {
    if (used_ >= 4) refill();
    const std::uint64_t lo = block_[used_];
    const std::uint64_t hi = block_[used_ + 1];
    used_ += 2;
    return (hi << 32) | lo;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  void refill() noexcept {
    block_ = block(ctr_, key_);
    if (++ctr_[0] == 0) ++ctr_[1];
    used_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 4> block_{};
  std::size_t used_ = 4;
};

/// Inverse-CDF sampler for a finite PMF.
class DiscreteSampler {
 public:
  explicit DiscreteSampler(std::span<const double> pmf) : cdf_(pmf.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
      acc += pmf[i];
      cdf_[i] = acc;
      if (pmf[i] > 0.0) last_ = i;
    }
  }

  std::size_t operator()(double u) const noexcept {
    const double scaled = u * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), scaled);
    const auto i = static_cast<std::size_t>(it - cdf_.begin());
    return std::min(i, last_);
  }

 private:
  std::vector<double> cdf_;
  std::size_t last_ = 0;
};

}  // namespace guided
