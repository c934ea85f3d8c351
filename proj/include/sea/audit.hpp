// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sea/adapter.hpp"
#include "sea/histogram.hpp"
#include "sea/numerics.hpp"

namespace sea {

struct Corpus;

struct Recall {
  std::uint32_t word_id = 0;
  double score = 0.0;
  bool operator==(const Recall&) const = default;
};

/// Nearest word per visual token by cosine similarity; ties go to the lower id.
std::vector<Recall> recall_words(const Matrix& visual_tokens, const Matrix& word_features);

struct AuditRecord {
  std::size_t patch_index = 0;
  std::uint32_t recalled_word_id = 0;
  double score = 0.0;
  std::optional<std::uint32_t> ground_truth_word_id;
  bool operator==(const AuditRecord&) const = default;
};

double recall_accuracy(std::span<const AuditRecord> records);

struct AuditReport {
  std::vector<AuditRecord> records;
  std::optional<double> top1_accuracy;
  Histogram histogram;
  std::string checkpoint_id;
  std::uint64_t seed = 0;
  std::string word_list_hash;
  std::vector<std::string> words;

  bool operator==(const AuditReport&) const = default;
};

inline constexpr std::size_t kAuditHistogramBins = 40;

nlohmann::json to_json(const AuditReport& r);
AuditReport audit_report_from_json(const nlohmann::json& j);
/// patch,recalled_word,recalled_word_id,score,ground_truth_word_id
std::string audit_csv(const AuditReport& r);

/// Recalls every patch of the corpus through the adapter against the mean-token
/// features of the word list.
AuditReport run_audit(const Corpus& corpus, const Matrix& word_features, const AdapterParams& params,
                      std::string checkpoint_id, std::uint64_t seed);

}  // namespace sea
