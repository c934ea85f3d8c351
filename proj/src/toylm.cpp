// SPDX-License-Identifier: Apache-2.0
#include "sea/toylm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "sea/io.hpp"
#include "sea/kernels.hpp"
#include "sea/rng.hpp"
#include "sea/tensor_file.hpp"

namespace sea {
namespace {

constexpr double kRmsEps = 1e-6;

// Per-tensor stream ids under stream_tag::lm_init.
enum : std::uint64_t { kWq = 1, kWk, kWv, kWo, kW1, kB1, kW2, kB2, kEmbedding };

EmbeddingMatrix gaussian(std::size_t rows, std::size_t cols, double stddev, Rng rng) {
  EmbeddingMatrix m(rows, cols);
  for (auto& v : m.data()) v = static_cast<float>(stddev * rng.normal());
  return m;
}

Matrix rmsnorm(const Matrix& x, std::vector<double>& inv_rms) {
  Matrix y(x.rows(), x.cols());
  inv_rms.assign(x.rows(), 0.0);
  for (std::size_t t = 0; t < x.rows(); ++t) {
    double ss = 0.0;
    for (double v : x.row(t)) ss += v * v;
    const double r = 1.0 / std::sqrt(ss / static_cast<double>(x.cols()) + kRmsEps);
    inv_rms[t] = r;
    for (std::size_t c = 0; c < x.cols(); ++c) y(t, c) = x(t, c) * r;
  }
  return y;
}

Matrix rmsnorm_backward(const Matrix& x, const std::vector<double>& inv_rms, const Matrix& dy) {
  Matrix dx(x.rows(), x.cols());
  const double d = static_cast<double>(x.cols());
  for (std::size_t t = 0; t < x.rows(); ++t) {
    const double r = inv_rms[t];
    double dot = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) dot += dy(t, c) * x(t, c);
    const double k = r * r * r * dot / d;
    for (std::size_t c = 0; c < x.cols(); ++c) dx(t, c) = r * dy(t, c) - x(t, c) * k;
  }
  return dx;
}

void add_in_place(Matrix& a, const Matrix& b) {
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) ad[i] += bd[i];
}

void add_row_bias(Matrix& a, const Matrix& bias) {
  for (std::size_t t = 0; t < a.rows(); ++t)
    for (std::size_t c = 0; c < a.cols(); ++c) a(t, c) += bias(0, c);
}

std::string lowercase(std::string_view w) {
  std::string out(w);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

Tokenizer::Tokenizer(TokenizerSpec spec) : spec_(std::move(spec)) {
  if (spec_.chunk_length == 0) throw Error(ErrorCode::InvalidArgument, "chunk_length must be >= 1");
  if (spec_.alphabet.empty()) throw Error(ErrorCode::InvalidArgument, "empty alphabet");
  pieces_ = {"<pad>", "<bos>"};
  if (spec_.policy == UnknownPolicy::map_to_unk) pieces_.push_back("<unk>");
  specials_ = pieces_.size();
  std::vector<std::string> level{""};
  for (std::size_t len = 1; len <= spec_.chunk_length; ++len) {
    std::vector<std::string> next;
    next.reserve(level.size() * spec_.alphabet.size());
    for (const auto& prefix : level)
      for (char c : spec_.alphabet) next.push_back(prefix + c);
    pieces_.insert(pieces_.end(), next.begin(), next.end());
    level = std::move(next);
  }
  for (std::uint32_t i = 0; i < pieces_.size(); ++i) {
    if (!ids_.emplace(pieces_[i], i).second) {
      throw Error(ErrorCode::InvalidArgument, "alphabet contains duplicate characters");
    }
  }
}

std::vector<std::string> Tokenizer::split(std::string_view word) const {
  if (word.empty()) throw Error(ErrorCode::InvalidArgument, "cannot tokenize an empty word");
  const auto lower = lowercase(word);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < lower.size(); i += spec_.chunk_length) {
    out.push_back(lower.substr(i, spec_.chunk_length));
  }
  return out;
}

std::vector<std::uint32_t> Tokenizer::tokenize(std::string_view word) const {
  std::vector<std::uint32_t> ids;
  for (const auto& piece : split(word)) {
    auto it = ids_.find(piece);
    if (it != ids_.end() && it->second >= specials_) {
      ids.push_back(it->second);
    } else if (spec_.policy == UnknownPolicy::map_to_unk) {
      ids.push_back(kUnk);
    } else {
      throw Error(ErrorCode::UnknownPiece, "'" + piece + "' in '" + std::string(word) + "'");
    }
  }
  return ids;
}

EmbeddingTable init_embedding_table(std::size_t vocab_size, std::size_t dim, std::uint64_t seed) {
  const Rng base(seed);
  return {gaussian(vocab_size, dim, 1.0 / std::sqrt(static_cast<double>(dim)),
                   base.derive({stream_tag::lm_init, kEmbedding})),
          true};
}

EmbeddingMatrix embed_tokens(const EmbeddingTable& table, std::span<const std::uint32_t> ids) {
  if (ids.empty()) throw Error(ErrorCode::InvalidArgument, "no token ids");
  EmbeddingMatrix out(ids.size(), table.dim());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= table.vocab_size()) {
      throw Error(ErrorCode::TokenIdOutOfRange, std::to_string(ids[i]));
    }
    std::ranges::copy(table.table.row(ids[i]), out.row(i).begin());
  }
  return out;
}

std::vector<double> label_text_feature(const EmbeddingTable& table, const Tokenizer& tokenizer,
                                       std::string_view word) {
  std::vector<double> mean(table.dim(), 0.0);
  std::size_t used = 0;
  for (std::uint32_t id : tokenizer.tokenize(word)) {
    if (tokenizer.is_special(id)) continue;
    if (id >= table.vocab_size()) throw Error(ErrorCode::TokenIdOutOfRange, std::to_string(id));
    const auto row = table.table.row(id);
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += row[c];
    ++used;
  }
  if (used == 0) {
    throw Error(ErrorCode::UnknownPiece, "'" + std::string(word) + "' has no regular tokens");
  }
  for (double& v : mean) v /= static_cast<double>(used);
  return mean;
}

Matrix label_text_features(const EmbeddingTable& table, const Tokenizer& tokenizer,
                           std::span<const std::string> words) {
  Matrix out(words.size(), table.dim());
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto f = label_text_feature(table, tokenizer, words[w]);
    std::ranges::copy(f, out.row(w).begin());
  }
  return out;
}

ModelInput build_model_input(const Matrix& visual_tokens, const EmbeddingTable& table,
                             std::span<const std::uint32_t> text_token_ids) {
  if (visual_tokens.rows() > 0 && visual_tokens.cols() != table.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "visual tokens have dim " + std::to_string(visual_tokens.cols()) +
                    ", model expects " + std::to_string(table.dim()));
  }
  ModelInput input;
  input.boundary = visual_tokens.rows();
  input.vectors = Matrix(visual_tokens.rows() + text_token_ids.size(), table.dim());
  for (std::size_t t = 0; t < visual_tokens.rows(); ++t) {
    std::ranges::copy(visual_tokens.row(t), input.vectors.row(t).begin());
  }
  for (std::size_t i = 0; i < text_token_ids.size(); ++i) {
    const auto id = text_token_ids[i];
    if (id >= table.vocab_size()) throw Error(ErrorCode::TokenIdOutOfRange, std::to_string(id));
    const auto src = table.table.row(id);
    auto dst = input.vectors.row(input.boundary + i);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = src[c];
  }
  return input;
}

ToyLmWeights init_toy_lm(const ToyLmConfig& config, std::uint64_t seed) {
  if (config.d_model == 0 || config.n_heads == 0 || config.d_model % config.n_heads != 0) {
    throw Error(ErrorCode::InvalidArgument, "d_model must be a positive multiple of n_heads");
  }
  const Rng base(seed);
  const auto stream = [&](std::uint64_t id) { return base.derive({stream_tag::lm_init, id}); };
  const std::size_t d = config.d_model, f = config.d_ff;
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  const double sf = 1.0 / std::sqrt(static_cast<double>(f));
  return {config,
          gaussian(d, d, sd, stream(kWq)),
          gaussian(d, d, sd, stream(kWk)),
          gaussian(d, d, sd, stream(kWv)),
          gaussian(d, d, sd, stream(kWo)),
          gaussian(f, d, sd, stream(kW1)),
          gaussian(1, f, 0.02, stream(kB1)),
          gaussian(d, f, sf, stream(kW2)),
          gaussian(1, d, 0.02, stream(kB2))};
}

ToyLm::ToyLm(ToyLmWeights weights, EmbeddingTable table)
    : weights_(std::move(weights)), table_(std::move(table)) {
  const auto& c = weights_.config;
  const auto check = [&](const EmbeddingMatrix& m, std::size_t r, std::size_t k, const char* name) {
    if (m.rows() != r || m.cols() != k) {
      throw Error(ErrorCode::DimensionMismatch, std::string("toy LM tensor ") + name);
    }
  };
  check(weights_.wq, c.d_model, c.d_model, "wq");
  check(weights_.wk, c.d_model, c.d_model, "wk");
  check(weights_.wv, c.d_model, c.d_model, "wv");
  check(weights_.wo, c.d_model, c.d_model, "wo");
  check(weights_.w1, c.d_ff, c.d_model, "w1");
  check(weights_.b1, 1, c.d_ff, "b1");
  check(weights_.w2, c.d_model, c.d_ff, "w2");
  check(weights_.b2, 1, c.d_model, "b2");
  if (table_.dim() != c.d_model) throw Error(ErrorCode::DimensionMismatch, "embedding dim");
  wq_ = Matrix::from_embedding(weights_.wq);
  wk_ = Matrix::from_embedding(weights_.wk);
  wv_ = Matrix::from_embedding(weights_.wv);
  wo_ = Matrix::from_embedding(weights_.wo);
  w1_ = Matrix::from_embedding(weights_.w1);
  b1_ = Matrix::from_embedding(weights_.b1);
  w2_ = Matrix::from_embedding(weights_.w2);
  b2_ = Matrix::from_embedding(weights_.b2);
  emb_ = Matrix::from_embedding(table_.table);
}

Matrix ToyLm::forward(const ModelInput& input) const {
  std::vector<std::size_t> all(input.length());
  for (std::size_t t = 0; t < all.size(); ++t) all[t] = t;
  return forward_pass(input, all).logits;
}

LmPass ToyLm::forward_pass(const ModelInput& input, std::span<const std::size_t> positions) const {
  const std::size_t T = input.length(), d = dim();
  if (T == 0) throw Error(ErrorCode::InvalidArgument, "empty model input");
  if (input.vectors.cols() != d) throw Error(ErrorCode::DimensionMismatch, "input dim");
  const std::size_t heads = weights_.config.n_heads, dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  LmPass p;
  p.x = input.vectors;
  p.n1 = rmsnorm(p.x, p.r1);
  p.q = kernels::gemm_nt(p.n1, wq_);
  p.k = kernels::gemm_nt(p.n1, wk_);
  p.v = kernels::gemm_nt(p.n1, wv_);

  // probs row (h * T + t) holds the causal attention of query t in head h.
  p.probs = Matrix(heads * T, T);
  p.attn = Matrix(T, d);
  const auto rows = static_cast<std::ptrdiff_t>(T);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < rows; ++t) {
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = h * dh;
      auto prob = p.probs.row(h * T + t);
      double mx = -1e300;
      for (std::ptrdiff_t s = 0; s <= t; ++s) {
        double acc = 0.0;
        for (std::size_t c = 0; c < dh; ++c) acc += p.q(t, off + c) * p.k(s, off + c);
        prob[s] = acc * scale;
        mx = std::max(mx, prob[s]);
      }
      double sum = 0.0;
      for (std::ptrdiff_t s = 0; s <= t; ++s) {
        prob[s] = std::exp(prob[s] - mx);
        sum += prob[s];
      }
      for (std::ptrdiff_t s = 0; s <= t; ++s) prob[s] /= sum;
      for (std::ptrdiff_t s = 0; s <= t; ++s)
        for (std::size_t c = 0; c < dh; ++c) p.attn(t, off + c) += prob[s] * p.v(s, off + c);
    }
  }

  p.h1 = kernels::gemm_nt(p.attn, wo_);
  add_in_place(p.h1, p.x);
  p.n2 = rmsnorm(p.h1, p.r2);
  p.u = kernels::gemm_nt(p.n2, w1_);
  add_row_bias(p.u, b1_);
  p.g = Matrix(p.u.rows(), p.u.cols());
  for (std::size_t i = 0; i < p.u.size(); ++i) p.g.data()[i] = gelu(p.u.data()[i]);
  p.h2 = kernels::gemm_nt(p.g, w2_);
  add_row_bias(p.h2, b2_);
  add_in_place(p.h2, p.h1);
  p.nf = rmsnorm(p.h2, p.rf);

  p.positions.assign(positions.begin(), positions.end());
  Matrix selected(positions.size(), d);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] >= T) throw Error(ErrorCode::InvalidArgument, "logit position out of range");
    std::ranges::copy(p.nf.row(positions[i]), selected.row(i).begin());
  }
  p.logits = kernels::gemm_nt(selected, emb_);
  return p;
}

Matrix ToyLm::backward_input(const LmPass& p, const Matrix& dlogits) const {
  if (dlogits.rows() != p.positions.size() || dlogits.cols() != vocab_size()) {
    throw Error(ErrorCode::DimensionMismatch, "dlogits shape");
  }
  const std::size_t T = p.x.rows(), d = dim();
  const std::size_t heads = weights_.config.n_heads, dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix dnf(T, d);
  const Matrix dsel = kernels::gemm_nn(dlogits, emb_);
  for (std::size_t i = 0; i < p.positions.size(); ++i) {
    auto dst = dnf.row(p.positions[i]);
    const auto src = dsel.row(i);
    for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
  }
  const Matrix dh2 = rmsnorm_backward(p.h2, p.rf, dnf);

  Matrix du = kernels::gemm_nn(dh2, w2_);
  for (std::size_t i = 0; i < du.size(); ++i) du.data()[i] *= gelu_grad(p.u.data()[i]);
  Matrix dh1 = rmsnorm_backward(p.h1, p.r2, kernels::gemm_nn(du, w1_));
  add_in_place(dh1, dh2);

  const Matrix da = kernels::gemm_nn(dh1, wo_);
  Matrix dq(T, d), dk(T, d), dv(T, d);
  const auto head_count = static_cast<std::ptrdiff_t>(heads);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t h = 0; h < head_count; ++h) {
    const std::size_t off = static_cast<std::size_t>(h) * dh;
    std::vector<double> dprob(T);
    for (std::size_t t = 0; t < T; ++t) {
      const auto prob = p.probs.row(h * T + t);
      double weighted = 0.0;
      for (std::size_t s = 0; s <= t; ++s) {
        double acc = 0.0;
        for (std::size_t c = 0; c < dh; ++c) {
          acc += da(t, off + c) * p.v(s, off + c);
          dv(s, off + c) += prob[s] * da(t, off + c);
        }
        dprob[s] = acc;
        weighted += acc * prob[s];
      }
      for (std::size_t s = 0; s <= t; ++s) {
        const double dscore = prob[s] * (dprob[s] - weighted) * scale;
        for (std::size_t c = 0; c < dh; ++c) {
          dq(t, off + c) += dscore * p.k(s, off + c);
          dk(s, off + c) += dscore * p.q(t, off + c);
        }
      }
    }
  }

  Matrix dn1 = kernels::gemm_nn(dq, wq_);
  add_in_place(dn1, kernels::gemm_nn(dk, wk_));
  add_in_place(dn1, kernels::gemm_nn(dv, wv_));
  Matrix dx = rmsnorm_backward(p.x, p.r1, dn1);
  add_in_place(dx, dh1);
  return dx;
}

std::uint64_t ToyLm::frozen_hash() const {
  std::uint64_t h = fnv1a(std::string_view{});
  for (const auto* m : {&weights_.wq, &weights_.wk, &weights_.wv, &weights_.wo, &weights_.w1,
                        &weights_.b1, &weights_.w2, &weights_.b2, &table_.table}) {
    h = fnv1a(std::as_bytes(m->data()), h);
  }
  return h;
}

void append_toy_lm(TensorSet& set, const ToyLm& lm) {
  const auto& w = lm.weights();
  set.add("lm.wq", w.wq);
  set.add("lm.wk", w.wk);
  set.add("lm.wv", w.wv);
  set.add("lm.wo", w.wo);
  set.add("lm.w1", w.w1);
  set.add("lm.b1", w.b1);
  set.add("lm.w2", w.w2);
  set.add("lm.b2", w.b2);
  set.add("lm.embedding", lm.table().table);
}

ToyLm load_toy_lm(const TensorSet& set, const ToyLmConfig& config) {
  ToyLmWeights w{config,
                 set.embedding("lm.wq"),
                 set.embedding("lm.wk"),
                 set.embedding("lm.wv"),
                 set.embedding("lm.wo"),
                 set.embedding("lm.w1"),
                 set.embedding("lm.b1"),
                 set.embedding("lm.w2"),
                 set.embedding("lm.b2")};
  return ToyLm(std::move(w), EmbeddingTable{set.embedding("lm.embedding"), true});
}

}  // namespace sea
