// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sea/histogram.hpp"
#include "sea/numerics.hpp"

namespace sea {

/// Ordered vocabulary. Entries are stored trimmed and lowercased, and must be
/// unique and non-empty in that form.
class WordList {
 public:
  WordList() = default;
  explicit WordList(std::vector<std::string> words);

  /// One word per line, UTF-8. Blank lines are skipped.
  static WordList load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const noexcept { return words_.size(); }
  const std::string& operator[](std::size_t i) const { return words_[i]; }
  const std::vector<std::string>& words() const noexcept { return words_; }
  std::uint64_t hash() const;

 private:
  std::vector<std::string> words_;
};

struct SemanticLabel {
  std::uint32_t word_id = 0;
  double score = 0.0;
  bool operator==(const SemanticLabel&) const = default;
};

struct SemanticLabelSet {
  std::size_t patch_index = 0;
  std::vector<SemanticLabel> labels;  // descending score, ties by ascending word_id
  bool operator==(const SemanticLabelSet&) const = default;
};

inline constexpr std::size_t kDefaultTopN = 10;

struct LabelExtraction {
  std::vector<SemanticLabelSet> sets;
  /// Ranking scores of every top-n candidate before the positivity filter.
  std::vector<double> candidate_scores;
};

/// Top-n words per patch by cosine (or negated cosine) similarity, dropping
/// non-positive scores. Output order follows patch order.
std::vector<SemanticLabelSet> extract_semantic_labels(const EmbeddingMatrix& patches,
                                                      const EmbeddingMatrix& word_embeddings,
                                                      std::size_t n = kDefaultTopN,
                                                      bool negate = false);

LabelExtraction extract_labels_with_candidates(const EmbeddingMatrix& patches,
                                               const EmbeddingMatrix& word_embeddings,
                                               std::size_t n = kDefaultTopN, bool negate = false,
                                               std::size_t patch_offset = 0);

struct UsageReport {
  std::vector<double> per_word_mean_score;
  std::vector<std::uint64_t> per_word_count;
  double utilization_rate = 0.0;
  double below_zero_fraction = 0.0;
  std::uint64_t selections = 0;
  Histogram histogram;  // empty counts when nothing was selected
};

inline constexpr std::size_t kUsageHistogramBins = 20;

UsageReport vocabulary_usage_report(std::span<const SemanticLabelSet> label_sets,
                                    std::span<const double> raw_candidate_scores,
                                    const WordList& word_list);

/// JSON-lines cache: {"patch": int, "labels": [[word_id, score], ...]}.
std::string label_cache_to_jsonl(std::span<const SemanticLabelSet> sets);
std::vector<SemanticLabelSet> label_cache_from_jsonl(std::string_view text);
void save_label_cache(const std::filesystem::path& path, std::span<const SemanticLabelSet> sets);
std::vector<SemanticLabelSet> load_label_cache(const std::filesystem::path& path);

}  // namespace sea
