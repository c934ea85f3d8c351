// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sea {

struct GradcheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t instances = 0;
  bool pass() const { return max_rel_error < tolerance; }
};

inline constexpr double kGradTolerance = 1e-4;
inline constexpr double kLmGradTolerance = 1e-3;

/// Finite-difference sweep over every hand-written backward pass on seeded
/// random instances (batch <= 8, dims <= 16).
std::vector<GradcheckEntry> run_gradcheck(std::uint64_t seed, std::size_t instances = 20);

}  // namespace sea
