#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "riskx/errors.hpp"

namespace riskx {

namespace detail {

/// One Philox4x32-10 block (Salmon et al. constants). Pure function of
/// (counter, key), so any draw is addressable without generator state.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

}  // namespace detail

/// Logical purposes carve the stream space so independent consumers of the
/// same seed never collide.
enum class StreamPurpose : std::uint32_t {
  Simulation = 1,   // index = replicate
  Geometry = 2,     // index = Monte-Carlo block
  Oracle = 3,       // test-only independent draws
  Generic = 4,
};

/// Sequential view over one Philox substream. Identity is (seed, purpose,
/// index); construction is free (no warm-up), so callers key streams by
/// logical work item (replicate r, block b) rather than by worker thread,
/// which makes parallel runs bit-identical to serial ones.
class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t index)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_lo_(static_cast<std::uint32_t>(index)),
        stream_hi_(static_cast<std::uint32_t>(purpose)) {
    if (index > 0xFFFFFFFFull) {
      throw InvalidInput("RngStream: stream index exceeds 2^32-1");
    }
  }

  std::uint64_t next_u64() {
    if (pos_ >= 4) refill();
    const std::uint64_t lo = buf_[pos_];
    const std::uint64_t hi = buf_[pos_ + 1];
    pos_ += 2;
    return lo | (hi << 32);
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; pairs are cached within the stream.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    // u1 in (0, 1] keeps the log finite.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(t);
    have_cached_ = true;
    return r * std::cos(t);
  }

 private:
  void refill() {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(call_), static_cast<std::uint32_t>(call_ >> 32),
        stream_lo_, stream_hi_};
    buf_ = detail::philox4x32(ctr, key_);
    ++call_;
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
  std::uint64_t call_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace riskx
