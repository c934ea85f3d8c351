// SPDX-License-Identifier: Apache-2.0
#include "sea/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include <json.hpp>

#include "sea/io.hpp"
#include "sea/rng.hpp"
#include "sea/tensor_file.hpp"

namespace sea {
namespace {

using nlohmann::json;

std::string piece_key(const Tokenizer& tok, const std::string& word) {
  auto pieces = tok.split(word);
  std::sort(pieces.begin(), pieces.end());
  std::string key;
  for (const auto& p : pieces) key += p + '|';
  return key;
}

// Words whose token multisets coincide would share one mean-token feature.
std::vector<std::string> pick_vocabulary(const SyntheticCorpusSpec& spec, const Tokenizer& tok,
                                         const WordList* source, Rng rng) {
  std::vector<std::string> out;
  std::set<std::string> keys;
  const auto accept = [&](const std::string& w) {
    try {
      tok.tokenize(w);
    } catch (const Error&) {
      return;
    }
    if (keys.insert(piece_key(tok, w)).second) out.push_back(w);
  };
  if (source != nullptr) {
    for (const auto& w : source->words()) {
      if (out.size() == spec.vocab_size) break;
      accept(w);
    }
    if (out.size() < spec.vocab_size) {
      throw Error(ErrorCode::InvalidArgument,
                  "word list yields only " + std::to_string(out.size()) + " usable words");
    }
    return out;
  }
  const auto& alphabet = tok.spec().alphabet;
  while (out.size() < spec.vocab_size) {
    const std::size_t len = 3 + rng.uniform_index(5);
    std::string w;
    for (std::size_t i = 0; i < len; ++i) w += alphabet[rng.uniform_index(alphabet.size())];
    accept(w);
  }
  return out;
}

json spec_to_json(const SyntheticCorpusSpec& s) {
  return {{"vocab_size", s.vocab_size}, {"d_v", s.d_v},       {"d_llm", s.d_llm},
          {"height", s.height},         {"width", s.width},   {"images", s.images},
          {"noise_sigma", s.noise_sigma}, {"seed", s.seed}};
}

SyntheticCorpusSpec spec_from_json(const json& j) {
  SyntheticCorpusSpec s;
  s.vocab_size = j.at("vocab_size");
  s.d_v = j.at("d_v");
  s.d_llm = j.at("d_llm");
  s.height = j.at("height");
  s.width = j.at("width");
  s.images = j.at("images");
  s.noise_sigma = j.at("noise_sigma");
  s.seed = j.at("seed");
  return s;
}

}  // namespace

void SyntheticCorpusSpec::validate() const {
  if (vocab_size == 0 || d_v == 0 || d_llm == 0 || height == 0 || width == 0 || images == 0) {
    throw Error(ErrorCode::InvalidArgument, "synthetic corpus counts must be >= 1");
  }
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise_sigma must be >= 0");
}

std::size_t Corpus::total_patches() const {
  std::size_t n = 0;
  for (const auto& g : grids) n += g.patch_count();
  return n;
}

EmbeddingMatrix Corpus::all_patches() const {
  if (grids.empty()) throw Error(ErrorCode::EmptyDataset, "corpus has no images");
  const std::size_t d = grids.front().features.cols();
  std::vector<float> data;
  data.reserve(total_patches() * d);
  for (const auto& g : grids) data.insert(data.end(), g.features.data().begin(), g.features.data().end());
  return EmbeddingMatrix(total_patches(), d, std::move(data), provenance);
}

std::uint64_t Corpus::feature_hash() const {
  std::uint64_t h = fnv1a(std::as_bytes(text_features.data()));
  for (const auto& g : grids) h = fnv1a(std::as_bytes(g.features.data()), h);
  return h;
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec,
                                          const WordList* source_words) {
  spec.validate();
  const Rng base = Rng(spec.seed).derive({stream_tag::corpus});
  Tokenizer tokenizer{TokenizerSpec{}};
  ToyLmConfig lm_config{spec.d_llm, spec.d_llm % 4 == 0 ? 4u : 1u, 2 * spec.d_llm};
  ToyLm lm(init_toy_lm(lm_config, spec.seed),
           init_embedding_table(tokenizer.vocab_size(), spec.d_llm, spec.seed));

  WordList words(pick_vocabulary(spec, tokenizer, source_words, base.derive({1})));
  const std::size_t q = words.size();
  const Matrix word_feats = label_text_features(lm.table(), tokenizer, words.words());

  // true_map: d_v x d_llm with N(0, 1/d_v) entries keeps |A f| close to |f|.
  Matrix true_map(spec.d_v, spec.d_llm);
  {
    Rng rng = base.derive({2});
    const double sd = 1.0 / std::sqrt(static_cast<double>(spec.d_v));
    for (double& v : true_map.data()) v = sd * rng.normal();
  }
  Matrix projected(q, spec.d_v);
  for (std::size_t w = 0; w < q; ++w)
    for (std::size_t r = 0; r < spec.d_v; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < spec.d_llm; ++c) acc += true_map(r, c) * word_feats(w, c);
      projected(w, r) = acc;
    }

  Corpus corpus;
  corpus.provenance = Provenance::synthetic;
  corpus.spec = spec;
  corpus.words = words;
  corpus.tokenizer = tokenizer.spec();
  corpus.lm_config = lm_config;
  corpus.text_features = to_embedding(projected);

  const std::size_t region_rows = std::min<std::size_t>(2, spec.height);
  const std::size_t region_cols = std::min<std::size_t>(2, spec.width);
  const std::size_t regions = region_rows * region_cols;
  for (std::size_t img = 0; img < spec.images; ++img) {
    Rng layout = base.derive({3, img});
    std::vector<std::uint32_t> pool(q);
    for (std::uint32_t w = 0; w < q; ++w) pool[w] = w;
    std::vector<std::uint32_t> region_word(regions);
    for (std::size_t r = 0; r < regions; ++r) {
      if (q >= regions) {
        const auto j = r + layout.uniform_index(q - r);  // partial Fisher-Yates
        std::swap(pool[r], pool[j]);
        region_word[r] = pool[r];
      } else {
        region_word[r] = static_cast<std::uint32_t>(layout.uniform_index(q));
      }
    }

    Rng noise = base.derive({4, img});
    EmbeddingMatrix feats(spec.height * spec.width, spec.d_v, Provenance::synthetic);
    std::vector<std::uint32_t> gt(spec.height * spec.width);
    for (std::size_t r = 0; r < spec.height; ++r)
      for (std::size_t c = 0; c < spec.width; ++c) {
        const std::size_t region = (r * region_rows / spec.height) * region_cols + c * region_cols / spec.width;
        const std::size_t patch = r * spec.width + c;
        gt[patch] = region_word[region];
        auto row = feats.row(patch);
        for (std::size_t k = 0; k < spec.d_v; ++k) {
          double v = projected(gt[patch], k);
          if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise.normal();
          row[k] = static_cast<float>(v);
        }
      }

    std::vector<std::uint32_t> caption{Tokenizer::kBos};
    std::vector<std::uint32_t> seen;
    for (auto w : region_word) {
      if (std::find(seen.begin(), seen.end(), w) != seen.end()) continue;
      seen.push_back(w);
      for (auto id : tokenizer.tokenize(words[w])) caption.push_back(id);
    }
    corpus.grids.emplace_back(spec.height, spec.width, std::move(feats), img);
    corpus.gt_words.push_back(std::move(gt));
    corpus.captions.push_back(std::move(caption));
  }
  return {std::move(corpus), std::move(lm), to_embedding(word_feats), std::move(true_map)};
}

void save_corpus(const std::filesystem::path& dir, const Corpus& corpus, const ToyLm& lm) {
  std::filesystem::create_directories(dir);
  TensorSet features;
  features.add("text_features", corpus.text_features);
  for (std::size_t i = 0; i < corpus.grids.size(); ++i) {
    const auto& g = corpus.grids[i];
    features.add("patches." + std::to_string(i), {g.height, g.width, g.features.cols()},
                 {g.features.data().begin(), g.features.data().end()});
  }
  save_tensors(dir / "corpus.sea", features);

  TensorSet model;
  append_toy_lm(model, lm);
  save_tensors(dir / "lm.sea", model);
  corpus.words.save(dir / "words.txt");

  json meta;
  meta["format"] = 1;
  meta["provenance"] = corpus.provenance == Provenance::synthetic ? "synthetic" : "exported";
  if (corpus.spec) meta["spec"] = spec_to_json(*corpus.spec);
  meta["word_list_hash"] = hex64(corpus.words.hash());
  meta["tokenizer"] = {{"alphabet", corpus.tokenizer.alphabet},
                       {"chunk_length", corpus.tokenizer.chunk_length},
                       {"policy", corpus.tokenizer.policy == UnknownPolicy::strict ? "strict" : "map_to_unk"}};
  meta["lm"] = {{"d_model", corpus.lm_config.d_model},
                {"n_heads", corpus.lm_config.n_heads},
                {"d_ff", corpus.lm_config.d_ff}};
  json images = json::array();
  for (std::size_t i = 0; i < corpus.grids.size(); ++i) {
    json img = {{"id", corpus.grids[i].image_id},
                {"height", corpus.grids[i].height},
                {"width", corpus.grids[i].width},
                {"caption", corpus.captions.at(i)}};
    if (i < corpus.gt_words.size()) img["gt_words"] = corpus.gt_words[i];
    images.push_back(std::move(img));
  }
  meta["images"] = std::move(images);
  write_file_atomic(dir / "corpus.json", meta.dump(1) + "\n");
}

Corpus load_corpus(const std::filesystem::path& dir) {
  Corpus corpus;
  json meta;
  try {
    meta = json::parse(read_file(dir / "corpus.json"));
    corpus.provenance = meta.at("provenance") == "exported" ? Provenance::exported : Provenance::synthetic;
    if (meta.contains("spec")) corpus.spec = spec_from_json(meta["spec"]);
    const auto& t = meta.at("tokenizer");
    corpus.tokenizer.alphabet = t.at("alphabet");
    corpus.tokenizer.chunk_length = t.at("chunk_length");
    corpus.tokenizer.policy = t.at("policy") == "strict" ? UnknownPolicy::strict : UnknownPolicy::map_to_unk;
    const auto& l = meta.at("lm");
    corpus.lm_config = {l.at("d_model"), l.at("n_heads"), l.at("d_ff")};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoFailure, "corpus.json: " + std::string(e.what()));
  }
  corpus.words = WordList::load(dir / "words.txt");
  if (meta.contains("word_list_hash") && meta["word_list_hash"] != hex64(corpus.words.hash())) {
    throw Error(ErrorCode::IoFailure, "words.txt does not match the hash recorded in corpus.json");
  }

  const TensorSet features = load_tensors(dir / "corpus.sea");
  corpus.text_features = features.embedding("text_features");
  corpus.text_features.set_provenance(corpus.provenance);
  if (corpus.text_features.rows() != corpus.words.size()) {
    throw Error(ErrorCode::DimensionMismatch, "text_features rows differ from word count");
  }
  const auto& images = meta.at("images");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& img = images[i];
    auto feats = features.embedding("patches." + std::to_string(i));
    feats.set_provenance(corpus.provenance);
    corpus.grids.emplace_back(img.at("height").get<std::size_t>(), img.at("width").get<std::size_t>(),
                              std::move(feats), img.at("id").get<std::uint64_t>());
    corpus.captions.push_back(img.at("caption").get<std::vector<std::uint32_t>>());
    if (img.contains("gt_words")) {
      corpus.gt_words.push_back(img["gt_words"].get<std::vector<std::uint32_t>>());
    }
  }
  if (corpus.grids.empty()) throw Error(ErrorCode::EmptyDataset, "corpus has no images");
  return corpus;
}

ToyLm load_corpus_lm(const std::filesystem::path& dir, const Corpus& corpus) {
  return load_toy_lm(load_tensors(dir / "lm.sea"), corpus.lm_config);
}

}  // namespace sea
