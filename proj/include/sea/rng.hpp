// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>

namespace sea {

/// Counter-based generator: draw i of stream s under seed k is a pure
/// function of (k, s, i), so independent streams can be consumed in any order
/// or on any thread without changing results.
class Rng {
 public:
  Rng() = default;
  Rng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  /// Child stream keyed by a path of integers, e.g. {step, image_id, stage}.
  Rng derive(std::initializer_list<std::uint64_t> path) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n); unbiased (rejection sampling). n >= 1.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via Box-Muller (one value per two uniforms).
  double normal();

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Stage tags used when deriving streams.
namespace stream_tag {
inline constexpr std::uint64_t window = 1;
inline constexpr std::uint64_t label = 2;
inline constexpr std::uint64_t dedup = 3;
inline constexpr std::uint64_t shuffle = 4;
inline constexpr std::uint64_t adapter_init = 5;
inline constexpr std::uint64_t lm_init = 6;
inline constexpr std::uint64_t corpus = 7;
}  // namespace stream_tag

}  // namespace sea
