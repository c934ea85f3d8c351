// SPDX-License-Identifier: Apache-2.0
#include "sea/rng.hpp"

#include <cmath>
#include <numbers>

namespace sea {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::derive(std::initializer_list<std::uint64_t> path) const {
  std::uint64_t s = mix64(stream_ ^ 0x5851f42d4c957f2dULL);
  for (std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x2545f4914f6cdd1dULL));
  return Rng(seed_, s);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t key = mix64(seed_) ^ mix64(stream_ + 0x632be59bd9b4e019ULL);
  return mix64(key + 0x9e3779b97f4a7c15ULL * (counter_++));
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  // Reject the top partial bucket.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x < limit) return x % n;
  }
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace sea
