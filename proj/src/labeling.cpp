// SPDX-License-Identifier: Apache-2.0
#include "sea/labeling.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "sea/io.hpp"
#include "sea/kernels.hpp"

namespace sea {
namespace {

std::string normalize_word(std::string_view w) {
  auto first = w.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = w.find_last_not_of(" \t\r\n");
  std::string out(w.substr(first, last - first + 1));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

WordList::WordList(std::vector<std::string> words) {
  if (words.empty()) throw Error(ErrorCode::InvalidArgument, "word list is empty");
  std::unordered_set<std::string> seen;
  words_.reserve(words.size());
  for (const auto& raw : words) {
    auto w = normalize_word(raw);
    if (w.empty()) throw Error(ErrorCode::InvalidArgument, "empty word in word list");
    if (!seen.insert(w).second) throw Error(ErrorCode::InvalidArgument, "duplicate word: " + w);
    words_.push_back(std::move(w));
  }
}

WordList WordList::load(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> words;
  for (std::string line; std::getline(in, line);) {
    if (!normalize_word(line).empty()) words.push_back(line);
  }
  return WordList(std::move(words));
}

void WordList::save(const std::filesystem::path& path) const {
  std::string text;
  for (const auto& w : words_) text += w + '\n';
  write_file_atomic(path, text);
}

std::uint64_t WordList::hash() const {
  std::uint64_t h = fnv1a(std::string_view{});
  for (const auto& w : words_) {
    h = fnv1a(w, h);
    h = fnv1a("\n", h);
  }
  return h;
}

LabelExtraction extract_labels_with_candidates(const EmbeddingMatrix& patches,
                                               const EmbeddingMatrix& word_embeddings,
                                               std::size_t n, bool negate,
                                               std::size_t patch_offset) {
  if (patches.cols() != word_embeddings.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "patch and word feature dims differ");
  }
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "top-n must be >= 1");

  const Matrix sim = kernels::cosine(Matrix::from_embedding(patches),
                                     Matrix::from_embedding(word_embeddings));
  const std::size_t m = sim.rows(), q = sim.cols(), top = std::min(n, q);
  const double sign = negate ? -1.0 : 1.0;

  LabelExtraction out;
  out.sets.resize(m);
  out.candidate_scores.resize(m * top);
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    std::vector<double> score(q);
    for (std::size_t j = 0; j < q; ++j) score[j] = sign * sim(i, j);
    std::vector<std::uint32_t> order(q);
    std::iota(order.begin(), order.end(), 0u);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                        return score[a] > score[b] || (score[a] == score[b] && a < b);
                      });
    auto& set = out.sets[i];
    set.patch_index = patch_offset + static_cast<std::size_t>(i);
    for (std::size_t r = 0; r < top; ++r) {
      const double s = score[order[r]];
      out.candidate_scores[static_cast<std::size_t>(i) * top + r] = s;
      if (s > 0.0) set.labels.push_back({order[r], s});
    }
  }
  return out;
}

std::vector<SemanticLabelSet> extract_semantic_labels(const EmbeddingMatrix& patches,
                                                      const EmbeddingMatrix& word_embeddings,
                                                      std::size_t n, bool negate) {
  return extract_labels_with_candidates(patches, word_embeddings, n, negate).sets;
}

UsageReport vocabulary_usage_report(std::span<const SemanticLabelSet> label_sets,
                                    std::span<const double> raw_candidate_scores,
                                    const WordList& word_list) {
  const std::size_t q = word_list.size();
  UsageReport report;
  report.per_word_mean_score.assign(q, 0.0);
  report.per_word_count.assign(q, 0);
  std::vector<double> selected;
  for (const auto& set : label_sets) {
    for (const auto& label : set.labels) {
      if (label.word_id >= q) {
        throw Error(ErrorCode::WordIdOutOfRange,
                    "word id " + std::to_string(label.word_id) + " >= " + std::to_string(q));
      }
      report.per_word_mean_score[label.word_id] += label.score;
      ++report.per_word_count[label.word_id];
      selected.push_back(label.score);
    }
  }
  std::size_t used = 0;
  for (std::size_t w = 0; w < q; ++w) {
    if (report.per_word_count[w] > 0) {
      report.per_word_mean_score[w] /= static_cast<double>(report.per_word_count[w]);
      ++used;
    }
  }
  report.utilization_rate = static_cast<double>(used) / static_cast<double>(q);
  report.selections = selected.size();
  if (!raw_candidate_scores.empty()) {
    const auto below = std::count_if(raw_candidate_scores.begin(), raw_candidate_scores.end(),
                                     [](double s) { return s < 0.0; });
    report.below_zero_fraction =
        static_cast<double>(below) / static_cast<double>(raw_candidate_scores.size());
  }
  if (!selected.empty()) {
    report.histogram = similarity_histogram(selected, kUsageHistogramBins, 0.0, 1.0);
  } else {
    report.histogram = Histogram{0.0, 1.0, {}};
  }
  return report;
}

std::string label_cache_to_jsonl(std::span<const SemanticLabelSet> sets) {
  std::string out;
  char buf[64];
  for (const auto& set : sets) {
    out += "{\"patch\":" + std::to_string(set.patch_index) + ",\"labels\":[";
    for (std::size_t i = 0; i < set.labels.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s[%u,%.9g]", i ? "," : "", set.labels[i].word_id,
                    set.labels[i].score);
      out += buf;
    }
    out += "]}\n";
  }
  return out;
}

std::vector<SemanticLabelSet> label_cache_from_jsonl(std::string_view text) {
  std::vector<SemanticLabelSet> sets;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      SemanticLabelSet set;
      set.patch_index = j.at("patch").get<std::size_t>();
      for (const auto& pair : j.at("labels")) {
        set.labels.push_back({pair.at(0).get<std::uint32_t>(), pair.at(1).get<double>()});
      }
      sets.push_back(std::move(set));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::IoFailure,
                  "label cache line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return sets;
}

void save_label_cache(const std::filesystem::path& path, std::span<const SemanticLabelSet> sets) {
  write_file_atomic(path, label_cache_to_jsonl(sets));
}

std::vector<SemanticLabelSet> load_label_cache(const std::filesystem::path& path) {
  return label_cache_from_jsonl(read_file(path));
}

}  // namespace sea
