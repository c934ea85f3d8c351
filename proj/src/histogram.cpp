// SPDX-License-Identifier: Apache-2.0
#include "sea/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "sea/error.hpp"

namespace sea {

std::uint64_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

double Histogram::bin_center(std::size_t i) const {
  const double width = (hi - lo) / static_cast<double>(counts.size());
  return lo + (static_cast<double>(i) + 0.5) * width;
}

std::string Histogram::to_gnuplot() const {
  std::string out = "# bin_center count\n";
  char line[64];
  for (std::size_t i = 0; i < counts.size(); ++i) {
    std::snprintf(line, sizeof line, "%.6f %llu\n", bin_center(i),
                  static_cast<unsigned long long>(counts[i]));
    out += line;
  }
  return out;
}

std::string Histogram::to_text(std::size_t width) const {
  const std::uint64_t peak = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
  const double step = counts.empty() ? 0.0 : (hi - lo) / static_cast<double>(counts.size());
  std::string out;
  char label[80];
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double a = lo + step * static_cast<double>(i);
    std::snprintf(label, sizeof label, "[%+.3f, %+.3f) %8llu ", a, a + step,
                  static_cast<unsigned long long>(counts[i]));
    out += label;
    const std::size_t bar =
        peak == 0 ? 0 : static_cast<std::size_t>(std::llround(
                            static_cast<double>(counts[i]) * width / static_cast<double>(peak)));
    out.append(bar, '#');
    out += '\n';
  }
  return out;
}

Histogram similarity_histogram(std::span<const double> scores, std::size_t bin_count, double lo,
                               double hi) {
  if (bin_count == 0) throw Error(ErrorCode::InvalidArgument, "bin_count must be >= 1");
  if (!(hi > lo)) throw Error(ErrorCode::InvalidArgument, "histogram range is empty");
  if (scores.empty()) throw Error(ErrorCode::EmptyScores, "no scores to bin");
  Histogram h{lo, hi, std::vector<std::uint64_t>(bin_count, 0)};
  const double scale = static_cast<double>(bin_count) / (hi - lo);
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error(ErrorCode::NonFiniteInput, "histogram score");
    const double pos = std::floor((s - lo) * scale);
    const auto last = static_cast<double>(bin_count - 1);
    const auto bin = static_cast<std::size_t>(std::clamp(pos, 0.0, last));
    ++h.counts[bin];
  }
  return h;
}

}  // namespace sea
