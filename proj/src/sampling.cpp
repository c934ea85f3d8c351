// SPDX-License-Identifier: Apache-2.0
#include "sea/sampling.hpp"

#include <map>
#include <string>

namespace sea {

PatchGrid::PatchGrid(std::size_t height, std::size_t width, EmbeddingMatrix features,
                     std::uint64_t image_id)
    : height(height), width(width), features(std::move(features)), image_id(image_id) {
  if (height == 0 || width == 0) throw Error(ErrorCode::InvalidArgument, "empty patch grid");
  if (this->features.rows() != height * width) {
    throw Error(ErrorCode::DimensionMismatch,
                "grid " + std::to_string(height) + "x" + std::to_string(width) + " has " +
                    std::to_string(this->features.rows()) + " feature rows");
  }
}

std::vector<double> normalize_scores(const SemanticLabelSet& s) {
  if (s.labels.empty()) throw Error(ErrorCode::EmptyLabelSet, "patch " + std::to_string(s.patch_index));
  double total = 0.0;
  for (const auto& l : s.labels) {
    if (!(l.score > 0.0)) throw Error(ErrorCode::InvalidArgument, "non-positive label score");
    total += l.score;
  }
  std::vector<double> p;
  p.reserve(s.labels.size());
  for (const auto& l : s.labels) p.push_back(l.score / total);
  return p;
}

std::uint32_t sample_label(const SemanticLabelSet& s, Rng& rng) {
  const auto p = normalize_scores(s);
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cumulative += p[i];
    if (u < cumulative) return s.labels[i].word_id;
  }
  return s.labels.back().word_id;  // u landed in the rounding gap above the last edge
}

std::vector<std::size_t> window_subsample(std::size_t height, std::size_t width, std::size_t k,
                                          Rng& rng) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "window side must be >= 1");
  std::vector<std::size_t> out;
  out.reserve(((height + k - 1) / k) * ((width + k - 1) / k));
  for (std::size_t r0 = 0; r0 < height; r0 += k) {
    const std::size_t rh = std::min(k, height - r0);
    for (std::size_t c0 = 0; c0 < width; c0 += k) {
      const std::size_t cw = std::min(k, width - c0);
      const auto pick = rng.uniform_index(rh * cw);
      out.push_back((r0 + pick / cw) * width + (c0 + pick % cw));
    }
  }
  return out;
}

std::vector<std::size_t> window_subsample(const PatchGrid& grid, std::size_t k, Rng& rng) {
  return window_subsample(grid.height, grid.width, k, rng);
}

std::vector<AlignmentPair> dedup_by_label(std::span<const AlignmentPair> pairs, Rng& rng) {
  // Holders per word in first-appearance order of the word.
  std::map<std::uint32_t, std::vector<std::size_t>> holders;
  std::vector<std::uint32_t> first_seen;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto& h = holders[pairs[i].word_id];
    if (h.empty()) first_seen.push_back(pairs[i].word_id);
    h.push_back(i);
  }
  std::vector<bool> keep(pairs.size(), false);
  for (std::uint32_t w : first_seen) {
    const auto& h = holders[w];
    keep[h.size() == 1 ? h.front() : h[rng.uniform_index(h.size())]] = true;
  }
  std::vector<AlignmentPair> out;
  out.reserve(first_seen.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (keep[i]) out.push_back(pairs[i]);
  }
  return out;
}

std::vector<AlignmentPair> build_alignment_batch(
    std::span<const PatchGrid> grids,
    std::span<const std::span<const SemanticLabelSet>> label_sets, std::size_t k,
    const Rng& base) {
  if (grids.size() != label_sets.size()) {
    throw Error(ErrorCode::MismatchedBatch, "label sets not aligned with grids");
  }
  std::vector<std::vector<AlignmentPair>> per_image(grids.size());
  const auto count = static_cast<std::ptrdiff_t>(grids.size());
  for (std::size_t g = 0; g < grids.size(); ++g) {
    if (label_sets[g].size() != grids[g].patch_count()) {
      throw Error(ErrorCode::MismatchedBatch,
                  "image " + std::to_string(grids[g].image_id) + " has " +
                      std::to_string(label_sets[g].size()) + " label sets for " +
                      std::to_string(grids[g].patch_count()) + " patches");
    }
    for (const auto& set : label_sets[g]) {
      for (const auto& l : set.labels) {
        if (!(l.score > 0.0)) throw Error(ErrorCode::InvalidArgument, "non-positive label score");
      }
    }
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t g = 0; g < count; ++g) {
    const auto& grid = grids[g];
    Rng window_rng = base.derive({grid.image_id, stream_tag::window});
    for (std::size_t patch : window_subsample(grid, k, window_rng)) {
      const auto& set = label_sets[g][patch];
      if (set.labels.empty()) continue;
      Rng label_rng = base.derive({grid.image_id, patch, stream_tag::label});
      per_image[g].push_back({grid.image_id, static_cast<std::size_t>(g), patch,
                              sample_label(set, label_rng)});
    }
  }
  std::vector<AlignmentPair> all;
  for (auto& v : per_image) all.insert(all.end(), v.begin(), v.end());
  Rng dedup_rng = base.derive({stream_tag::dedup});
  return dedup_by_label(all, dedup_rng);
}

}  // namespace sea
