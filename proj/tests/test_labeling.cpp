// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

#include "sea/error.hpp"
#include "sea/labeling.hpp"
#include "sea/synthetic.hpp"
#include "support.hpp"

using namespace sea;

namespace {

void check_same_labels(const std::vector<SemanticLabelSet>& got,
                       const std::vector<SemanticLabelSet>& want) {
  REQUIRE(got.size() == want.size());
  for (std::size_t p = 0; p < got.size(); ++p) {
    CHECK(got[p].patch_index == want[p].patch_index);
    REQUIRE(got[p].labels.size() == want[p].labels.size());
    for (std::size_t i = 0; i < got[p].labels.size(); ++i) {
      CHECK(got[p].labels[i].word_id == want[p].labels[i].word_id);
      CHECK(got[p].labels[i].score == doctest::Approx(want[p].labels[i].score).epsilon(1e-12));
    }
  }
}

}  // namespace

TEST_CASE("word list normalizes, rejects duplicates and round-trips") {
  const WordList w({"  Red ", "blue", "GREEN"});
  CHECK(w.size() == 3);
  CHECK(w[0] == "red");
  CHECK(w[2] == "green");
  CHECK_THROWS_AS(WordList({"red", "RED"}), Error);
  CHECK_THROWS_AS(WordList({"red", "  "}), Error);
  CHECK_THROWS_AS(WordList(std::vector<std::string>{}), Error);

  test::TempDir dir("words");
  w.save(dir / "w.txt");
  const auto back = WordList::load(dir / "w.txt");
  CHECK(back.words() == w.words());
  CHECK(back.hash() == w.hash());
  CHECK(WordList({"blue", "red", "green"}).hash() != w.hash());
}

TEST_CASE("word list loader skips blank lines") {
  test::TempDir dir("words_blank");
  std::ofstream(dir / "w.txt") << "cat\n\n  dog\r\n\nemu\n";
  const auto w = WordList::load(dir / "w.txt");
  CHECK(w.words() == std::vector<std::string>{"cat", "dog", "emu"});
}

TEST_CASE("a patch equal to a word row labels itself first") {
  Rng rng(8);
  const auto words = test::random_embedding(6, 5, rng);
  EmbeddingMatrix patch(1, 5);
  for (std::size_t c = 0; c < 5; ++c) patch(0, c) = words(3, c);
  const auto sets = extract_semantic_labels(patch, words);
  REQUIRE_FALSE(sets[0].labels.empty());
  CHECK(sets[0].labels[0].word_id == 3);
  CHECK(sets[0].labels[0].score == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("small instance matches the full-sort oracle") {
  Rng rng(1);
  const auto patches = test::random_embedding(3, 4, rng);
  const auto words = test::random_embedding(6, 4, rng);
  for (bool negate : {false, true}) {
    check_same_labels(extract_semantic_labels(patches, words, 10, negate),
                      test::brute_force_labels(patches, words, 10, negate));
  }
}

TEST_CASE("random instances match the full-sort oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = 1 + rng.uniform_index(64), q = 1 + rng.uniform_index(200);
    const std::size_t d = 2 + rng.uniform_index(15), n = 1 + rng.uniform_index(20);
    const bool negate = rng.uniform() < 0.3;
    const auto patches = test::random_embedding(m, d, rng);
    const auto words = test::random_embedding(q, d, rng);
    check_same_labels(extract_semantic_labels(patches, words, n, negate),
                      test::brute_force_labels(patches, words, n, negate));
  }
}

TEST_CASE("label set invariants hold") {
  Rng rng(5);
  const auto patches = test::random_embedding(30, 6, rng);
  const auto words = test::random_embedding(40, 6, rng);
  const auto sets = extract_semantic_labels(patches, words, 7);
  for (const auto& s : sets) {
    CHECK(s.labels.size() <= 7);
    std::set<std::uint32_t> ids;
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
      CHECK(s.labels[i].score > 0.0);
      CHECK(s.labels[i].score <= 1.0 + 1e-12);
      ids.insert(s.labels[i].word_id);
      if (i > 0) {
        const auto& a = s.labels[i - 1];
        const auto& b = s.labels[i];
        CHECK((a.score > b.score || (a.score == b.score && a.word_id < b.word_id)));
      }
    }
    CHECK(ids.size() == s.labels.size());
  }
}

TEST_CASE("extraction is invariant to positive row scaling") {
  Rng rng(12);
  const auto patches = test::random_embedding(10, 5, rng);
  const auto words = test::random_embedding(20, 5, rng);
  auto scaled_p = patches;
  auto scaled_w = words;
  for (std::size_t r = 0; r < scaled_p.rows(); ++r)
    for (float& v : scaled_p.row(r)) v *= static_cast<float>(r + 1) * 0.5f;
  for (std::size_t r = 0; r < scaled_w.rows(); ++r)
    for (float& v : scaled_w.row(r)) v *= 4.0f;
  const auto a = extract_semantic_labels(patches, words, 5);
  const auto b = extract_semantic_labels(scaled_p, scaled_w, 5);
  REQUIRE(a.size() == b.size());
  for (std::size_t p = 0; p < a.size(); ++p) {
    REQUIRE(a[p].labels.size() == b[p].labels.size());
    for (std::size_t i = 0; i < a[p].labels.size(); ++i) {
      CHECK(a[p].labels[i].word_id == b[p].labels[i].word_id);
      CHECK(a[p].labels[i].score == doctest::Approx(b[p].labels[i].score).epsilon(1e-6));
    }
  }
}

TEST_CASE("all-negative similarities give an empty label set") {
  const auto patch = EmbeddingMatrix::from_rows({{1, 0}});
  const auto words = EmbeddingMatrix::from_rows({{-1, 0}, {-1, 1}});
  CHECK(extract_semantic_labels(patch, words)[0].labels.empty());
  const auto flipped = extract_semantic_labels(patch, words, 10, true);
  REQUIRE(flipped[0].labels.size() == 2);
  CHECK(flipped[0].labels[0].word_id == 0);
}

TEST_CASE("extraction errors") {
  const auto patch = EmbeddingMatrix::from_rows({{1, 0}});
  const auto words = EmbeddingMatrix::from_rows({{1, 0, 0}});
  try {
    extract_semantic_labels(patch, words);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
  CHECK_THROWS_AS(extract_semantic_labels(patch, EmbeddingMatrix::from_rows({{1, 0}}), 0), Error);
}

TEST_CASE("usage report small examples") {
  const WordList words({"a", "b"});
  const std::vector<SemanticLabelSet> one{{0, {{0, 0.5}}}};
  const std::vector<double> raw{0.5, -0.2};
  const auto r = vocabulary_usage_report(one, raw, words);
  CHECK(r.utilization_rate == 0.5);
  CHECK(r.per_word_mean_score == std::vector<double>{0.5, 0.0});
  CHECK(r.below_zero_fraction == 0.5);
  CHECK(r.histogram.total() == 1);

  const auto empty = vocabulary_usage_report({}, {}, words);
  CHECK(empty.utilization_rate == 0.0);
  CHECK(empty.histogram.counts.empty());

  const std::vector<SemanticLabelSet> bad{{0, {{2, 0.5}}}};
  try {
    vocabulary_usage_report(bad, raw, words);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WordIdOutOfRange);
  }
}

TEST_CASE("usage report on a synthetic corpus matches an independent tally") {
  const auto synth = generate_synthetic_corpus(test::tiny_spec());
  const auto& corpus = synth.corpus;
  const auto ex = extract_labels_with_candidates(corpus.all_patches(), corpus.text_features, 5);
  const auto report = vocabulary_usage_report(ex.sets, ex.candidate_scores, corpus.words);

  const std::size_t q = corpus.words.size();
  std::map<std::uint32_t, std::pair<double, int>> tally;
  std::uint64_t selections = 0;
  for (const auto& s : ex.sets)
    for (const auto& l : s.labels) {
      tally[l.word_id].first += l.score;
      tally[l.word_id].second += 1;
      ++selections;
    }
  std::size_t below = 0;
  for (double c : ex.candidate_scores) below += c < 0.0 ? 1 : 0;

  CHECK(ex.candidate_scores.size() == corpus.total_patches() * 5);
  CHECK(report.selections == selections);
  CHECK(report.utilization_rate == doctest::Approx(static_cast<double>(tally.size()) / q));
  CHECK(report.below_zero_fraction ==
        doctest::Approx(static_cast<double>(below) / ex.candidate_scores.size()));
  CHECK(report.histogram.total() == selections);
  for (std::uint32_t w = 0; w < q; ++w) {
    const auto it = tally.find(w);
    const double want = it == tally.end() ? 0.0 : it->second.first / it->second.second;
    CHECK(report.per_word_mean_score[w] == doctest::Approx(want).epsilon(1e-12));
    CHECK(report.per_word_count[w] == (it == tally.end() ? 0u : static_cast<unsigned>(it->second.second)));
  }
}

TEST_CASE("label cache uses the documented JSON lines layout") {
  const std::vector<SemanticLabelSet> sets{{0, {{3, 0.123456789123}, {1, 0.5}}}, {1, {}}};
  const auto text = label_cache_to_jsonl(sets);
  CHECK(text == "{\"patch\":0,\"labels\":[[3,0.123456789],[1,0.5]]}\n{\"patch\":1,\"labels\":[]}\n");
  const auto back = label_cache_from_jsonl(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].labels[0].word_id == 3);
  CHECK(back[0].labels[0].score == 0.123456789);
  CHECK(back[1].labels.empty());
}

TEST_CASE("label cache round-trips extracted labels within 9 significant digits") {
  Rng rng(4);
  const auto sets = extract_semantic_labels(test::random_embedding(20, 6, rng),
                                            test::random_embedding(30, 6, rng), 10);
  test::TempDir dir("cache");
  save_label_cache(dir / "labels.jsonl", sets);
  const auto back = load_label_cache(dir / "labels.jsonl");
  REQUIRE(back.size() == sets.size());
  for (std::size_t p = 0; p < sets.size(); ++p) {
    REQUIRE(back[p].labels.size() == sets[p].labels.size());
    for (std::size_t i = 0; i < sets[p].labels.size(); ++i) {
      CHECK(back[p].labels[i].word_id == sets[p].labels[i].word_id);
      CHECK(back[p].labels[i].score == doctest::Approx(sets[p].labels[i].score).epsilon(1e-8));
    }
  }
  // A second save of the loaded data is byte-stable.
  CHECK(label_cache_to_jsonl(back) == label_cache_to_jsonl(sets));
}

TEST_CASE("malformed label cache lines are rejected") {
  CHECK_THROWS(label_cache_from_jsonl("{\"patch\":0}\n"));
  CHECK_THROWS(label_cache_from_jsonl("not json\n"));
}
