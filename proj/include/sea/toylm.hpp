// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sea/numerics.hpp"

namespace sea {

class TensorSet;

enum class UnknownPolicy { strict, map_to_unk };

struct TokenizerSpec {
  std::string alphabet = "abcdefghijklmnopqrstuvwxyz";
  std::size_t chunk_length = 2;
  UnknownPolicy policy = UnknownPolicy::strict;
};

/// Splits a lowercased word into consecutive fixed-length character chunks.
/// The vocabulary is the specials followed by every string of length
/// 1..chunk_length over the alphabet.
class Tokenizer {
 public:
  static constexpr std::uint32_t kPad = 0;
  static constexpr std::uint32_t kBos = 1;
  static constexpr std::uint32_t kUnk = 2;  // present only under map_to_unk

  explicit Tokenizer(TokenizerSpec spec = {});

  const TokenizerSpec& spec() const noexcept { return spec_; }
  std::size_t vocab_size() const noexcept { return pieces_.size(); }
  std::size_t special_count() const noexcept { return specials_; }
  bool is_special(std::uint32_t id) const noexcept { return id < specials_; }
  const std::string& piece(std::uint32_t id) const { return pieces_.at(id); }

  std::vector<std::string> split(std::string_view word) const;
  std::vector<std::uint32_t> tokenize(std::string_view word) const;

 private:
  TokenizerSpec spec_;
  std::size_t specials_ = 0;
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

/// The frozen token embedding layer.
struct EmbeddingTable {
  EmbeddingMatrix table;
  bool frozen = true;

  std::size_t vocab_size() const noexcept { return table.rows(); }
  std::size_t dim() const noexcept { return table.cols(); }
};

EmbeddingTable init_embedding_table(std::size_t vocab_size, std::size_t dim, std::uint64_t seed);

EmbeddingMatrix embed_tokens(const EmbeddingTable& table, std::span<const std::uint32_t> ids);

/// Mean of the word's token embeddings, specials excluded.
std::vector<double> label_text_feature(const EmbeddingTable& table, const Tokenizer& tokenizer,
                                       std::string_view word);

/// Stacks label_text_feature over a word list.
Matrix label_text_features(const EmbeddingTable& table, const Tokenizer& tokenizer,
                           std::span<const std::string> words);

struct ModelInput {
  Matrix vectors;            // visual tokens first, then text-token embeddings
  std::size_t boundary = 0;  // index of the first text position
  std::size_t length() const noexcept { return vectors.rows(); }
};

ModelInput build_model_input(const Matrix& visual_tokens, const EmbeddingTable& table,
                             std::span<const std::uint32_t> text_token_ids);

struct ToyLmConfig {
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t d_ff = 128;
};

/// Frozen weights of one pre-norm causal transformer block. The output head
/// is tied to the embedding table.
struct ToyLmWeights {
  ToyLmConfig config;
  EmbeddingMatrix wq, wk, wv, wo;  // d x d, y = x W^T
  EmbeddingMatrix w1, b1;          // d_ff x d, 1 x d_ff
  EmbeddingMatrix w2, b2;          // d x d_ff, 1 x d
};

ToyLmWeights init_toy_lm(const ToyLmConfig& config, std::uint64_t seed);

/// Activations kept for the input-gradient pass.
struct LmPass {
  Matrix x, n1, q, k, v, probs, attn, h1, n2, u, g, h2, nf;
  std::vector<double> r1, r2, rf;  // per-row inverse RMS
  std::vector<std::size_t> positions;
  Matrix logits;  // positions.size() x vocab
};

class ToyLm {
 public:
  ToyLm(ToyLmWeights weights, EmbeddingTable table);

  const ToyLmWeights& weights() const noexcept { return weights_; }
  const EmbeddingTable& table() const noexcept { return table_; }
  std::size_t vocab_size() const noexcept { return table_.vocab_size(); }
  std::size_t dim() const noexcept { return table_.dim(); }

  /// Logits at every position.
  Matrix forward(const ModelInput& input) const;
  /// Logits only at `positions` (ascending); the pass keeps activations.
  LmPass forward_pass(const ModelInput& input, std::span<const std::size_t> positions) const;
  /// Gradient w.r.t. input vectors given dL/dlogits at the pass positions.
  Matrix backward_input(const LmPass& pass, const Matrix& dlogits) const;

  /// Hash over every frozen byte (weights and embedding table).
  std::uint64_t frozen_hash() const;

 private:
  ToyLmWeights weights_;
  EmbeddingTable table_;
  Matrix wq_, wk_, wv_, wo_, w1_, b1_, w2_, b2_, emb_;
};

void append_toy_lm(TensorSet& set, const ToyLm& lm);
ToyLm load_toy_lm(const TensorSet& set, const ToyLmConfig& config);

}  // namespace sea
