// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sea/labeling.hpp"
#include "sea/numerics.hpp"
#include "sea/rng.hpp"

namespace sea {

struct PatchGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  EmbeddingMatrix features;  // height * width rows, row-major patch order
  std::uint64_t image_id = 0;

  PatchGrid() = default;
  PatchGrid(std::size_t height, std::size_t width, EmbeddingMatrix features,
            std::uint64_t image_id);
  std::size_t patch_count() const noexcept { return height * width; }
};

struct AlignmentPair {
  std::uint64_t image_id = 0;
  std::size_t grid_slot = 0;    // position of the source grid within the batch
  std::size_t patch_index = 0;  // row within that grid's features
  std::uint32_t word_id = 0;
  bool operator==(const AlignmentPair&) const = default;
};

inline constexpr std::size_t kDefaultWindow = 2;

/// Sampling distribution proportional to label scores.
std::vector<double> normalize_scores(const SemanticLabelSet& s);

std::uint32_t sample_label(const SemanticLabelSet& s, Rng& rng);

/// One uniformly chosen patch per k x k window; border windows may be smaller.
/// Indices come back in window raster order.
std::vector<std::size_t> window_subsample(std::size_t height, std::size_t width, std::size_t k,
                                          Rng& rng);
std::vector<std::size_t> window_subsample(const PatchGrid& grid, std::size_t k, Rng& rng);

/// Keeps one uniformly chosen holder per word id; survivors keep their order.
std::vector<AlignmentPair> dedup_by_label(std::span<const AlignmentPair> pairs, Rng& rng);

/// Windowing, empty-set filtering, label sampling and batch-wide dedup. Every
/// random choice is drawn from a stream derived from `base` and the image id,
/// so the result does not depend on evaluation order.
std::vector<AlignmentPair> build_alignment_batch(
    std::span<const PatchGrid> grids,
    std::span<const std::span<const SemanticLabelSet>> label_sets, std::size_t k,
    const Rng& base);

}  // namespace sea
