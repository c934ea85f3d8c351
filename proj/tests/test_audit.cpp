// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sstream>

#include "sea/adapter.hpp"
#include "sea/audit.hpp"
#include "sea/error.hpp"
#include "sea/synthetic.hpp"
#include "support.hpp"

using namespace sea;

TEST_CASE("recall picks the nearest word by cosine and breaks ties low") {
  const Matrix words = Matrix::from_rows({{1, 0}, {0, 1}, {1, 1}, {2, 0}});
  const Matrix tokens = Matrix::from_rows({{5, 0.1}, {0, 3}, {1, 1.05}, {3, 0}});
  const auto r = recall_words(tokens, words);
  CHECK(r[0].word_id == 0);
  CHECK(r[1].word_id == 1);
  CHECK(r[2].word_id == 2);
  CHECK(r[3].word_id == 0);  // tie between rows 0 and 3
  CHECK(r[3].score == doctest::Approx(1.0));
}

TEST_CASE("recall is invariant to positive scaling of tokens") {
  Rng rng(1);
  const Matrix words = test::random_matrix(30, 8, rng);
  const Matrix tokens = test::random_matrix(20, 8, rng);
  Matrix scaled = tokens;
  for (std::size_t r = 0; r < scaled.rows(); ++r)
    for (double& v : scaled.row(r)) v *= 0.1 + r;
  const auto a = recall_words(tokens, words);
  const auto b = recall_words(scaled, words);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].word_id == b[i].word_id);
    CHECK(a[i].score == doctest::Approx(b[i].score).epsilon(1e-12));
  }
}

TEST_CASE("recall accuracy needs ground truth") {
  const std::vector<AuditRecord> recs{{0, 1, 0.5, 1u}, {1, 2, 0.5, 3u}, {2, 4, 0.1, 4u}, {3, 0, 0.9, 0u}};
  CHECK(recall_accuracy(recs) == 0.75);
  const std::vector<AuditRecord> missing{{0, 1, 0.5, std::nullopt}};
  try {
    recall_accuracy(missing);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingGroundTruth);
  }
}

TEST_CASE("audit on a synthetic corpus at init is near chance") {
  const auto synth = generate_synthetic_corpus(test::tiny_spec());
  const auto words = Matrix::from_embedding(synth.lm_word_features);
  const auto params = init_adapter(AdapterArch::mlp2, 8, 16, 16, 2);
  const auto report = run_audit(synth.corpus, words, params, "init", 2);
  CHECK(report.records.size() == synth.corpus.total_patches());
  REQUIRE(report.top1_accuracy.has_value());
  CHECK(*report.top1_accuracy < 0.5);
  CHECK(report.histogram.total() == report.records.size());
  CHECK(report.histogram.counts.size() == kAuditHistogramBins);
  CHECK(report.word_list_hash.size() == 16);
  CHECK(report.words == synth.corpus.words.words());
}

TEST_CASE("audit through the planted map recalls the ground truth") {
  const auto synth = generate_synthetic_corpus(test::tiny_spec());
  const auto words = Matrix::from_embedding(synth.lm_word_features);
  // The transpose of the planted map as a linear adapter.
  AdapterParams p;
  p.arch = AdapterArch::linear;
  p.w1 = Matrix(16, 8);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 8; ++j) p.w1(i, j) = synth.true_map(j, i);
  p.b1 = Matrix(1, 16);
  const auto report = run_audit(synth.corpus, words, p, "oracle", 0);
  CHECK(*report.top1_accuracy > 0.5);
}

TEST_CASE("audit report JSON and CSV") {
  AuditReport r;
  r.records = {{0, 1, 0.5, 1u}, {1, 0, -0.25, std::nullopt}};
  r.top1_accuracy = 0.5;
  r.histogram = {-1, 1, {0, 1, 1, 0}};
  r.checkpoint_id = "abc";
  r.seed = 4;
  r.word_list_hash = "0123456789abcdef";
  r.words = {"cat", "dog"};
  const auto back = audit_report_from_json(nlohmann::json::parse(to_json(r).dump()));
  CHECK(back == r);
  const auto csv = audit_csv(r);
  std::istringstream in(csv);
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  CHECK(header == "patch,recalled_word,recalled_word_id,score,ground_truth_word_id");
  CHECK(first.rfind("0,dog,1,", 0) == 0);
  CHECK(second.back() == ',');
}
