// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sea {

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const;
  double bin_center(std::size_t i) const;
  /// Two-column "center count" text, readable by gnuplot.
  std::string to_gnuplot() const;
  /// Horizontal bar rendering for terminals.
  std::string to_text(std::size_t width = 50) const;

  bool operator==(const Histogram&) const = default;
};

/// Uniform bins over [lo, hi]; values outside the range land in the edge bins.
Histogram similarity_histogram(std::span<const double> scores, std::size_t bin_count,
                               double lo, double hi);

}  // namespace sea
