// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "sea/labeling.hpp"
#include "sea/numerics.hpp"
#include "sea/sampling.hpp"
#include "sea/toylm.hpp"

namespace sea {

struct SyntheticCorpusSpec {
  std::size_t vocab_size = 50;
  std::size_t d_v = 32;
  std::size_t d_llm = 64;
  std::size_t height = 8;
  std::size_t width = 8;
  std::size_t images = 200;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Everything the pipeline reads from a corpus directory. Ground truth is
/// only known for synthetic corpora.
struct Corpus {
  Provenance provenance = Provenance::synthetic;
  std::optional<SyntheticCorpusSpec> spec;
  WordList words;
  TokenizerSpec tokenizer;
  ToyLmConfig lm_config;
  EmbeddingMatrix text_features;  // q x d_v, the label-side word features
  std::vector<PatchGrid> grids;
  std::vector<std::vector<std::uint32_t>> gt_words;  // per image, per patch; may be empty
  std::vector<std::vector<std::uint32_t>> captions;  // per image, starting with <bos>

  std::size_t patches_per_image() const { return grids.empty() ? 0 : grids.front().patch_count(); }
  std::size_t total_patches() const;
  /// All patch rows stacked in image order.
  EmbeddingMatrix all_patches() const;
  /// Hash over the patch and text feature bytes.
  std::uint64_t feature_hash() const;
};

struct SyntheticCorpus {
  Corpus corpus;
  ToyLm lm;
  EmbeddingMatrix lm_word_features;  // q x d_llm, mean-token features of the words
  Matrix true_map;                   // d_v x d_llm planted map
};

/// Plants a random linear map from LM word features to vision features;
/// every patch is the mapped feature of its ground-truth word plus Gaussian
/// noise. Images are split into up to 2 x 2 regions, one word per region,
/// and the caption lists the region words. When `source_words` is given,
/// the vocabulary is its first usable entries; otherwise pseudo-words are drawn.
SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec,
                                          const WordList* source_words = nullptr);

// Directory layout: corpus.json, corpus.sea, lm.sea, words.txt.
void save_corpus(const std::filesystem::path& dir, const Corpus& corpus, const ToyLm& lm);
Corpus load_corpus(const std::filesystem::path& dir);
ToyLm load_corpus_lm(const std::filesystem::path& dir, const Corpus& corpus);

}  // namespace sea
