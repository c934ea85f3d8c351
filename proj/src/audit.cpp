// SPDX-License-Identifier: Apache-2.0
#include "sea/audit.hpp"

#include <cstdio>

#include "sea/io.hpp"
#include "sea/kernels.hpp"
#include "sea/synthetic.hpp"

namespace sea {

using nlohmann::json;

std::vector<Recall> recall_words(const Matrix& visual_tokens, const Matrix& word_features) {
  if (visual_tokens.cols() != word_features.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "visual token and word feature dims differ");
  }
  if (word_features.rows() == 0) throw Error(ErrorCode::InvalidArgument, "no words to recall");
  const Matrix sim = kernels::cosine(visual_tokens, word_features);
  std::vector<Recall> out(sim.rows());
  for (std::size_t t = 0; t < sim.rows(); ++t) {
    std::uint32_t best = 0;
    for (std::uint32_t w = 1; w < sim.cols(); ++w) {
      if (sim(t, w) > sim(t, best)) best = w;
    }
    out[t] = {best, sim(t, best)};
  }
  return out;
}

double recall_accuracy(std::span<const AuditRecord> records) {
  if (records.empty()) throw Error(ErrorCode::MissingGroundTruth, "no records");
  std::size_t correct = 0;
  for (const auto& r : records) {
    if (!r.ground_truth_word_id) {
      throw Error(ErrorCode::MissingGroundTruth, "patch " + std::to_string(r.patch_index));
    }
    if (*r.ground_truth_word_id == r.recalled_word_id) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

json to_json(const AuditReport& r) {
  json records = json::array();
  for (const auto& rec : r.records) {
    json j = {{"patch", rec.patch_index}, {"word_id", rec.recalled_word_id}, {"score", rec.score}};
    j["ground_truth"] = rec.ground_truth_word_id ? json(*rec.ground_truth_word_id) : json(nullptr);
    records.push_back(std::move(j));
  }
  return {{"checkpoint", r.checkpoint_id},
          {"seed", r.seed},
          {"word_list_hash", r.word_list_hash},
          {"words", r.words},
          {"top1_accuracy", r.top1_accuracy ? json(*r.top1_accuracy) : json(nullptr)},
          {"histogram", {{"lo", r.histogram.lo}, {"hi", r.histogram.hi}, {"counts", r.histogram.counts}}},
          {"tokens", std::move(records)}};
}

AuditReport audit_report_from_json(const json& j) {
  AuditReport r;
  try {
    r.checkpoint_id = j.at("checkpoint");
    r.seed = j.at("seed");
    r.word_list_hash = j.at("word_list_hash");
    r.words = j.at("words").get<std::vector<std::string>>();
    if (!j.at("top1_accuracy").is_null()) r.top1_accuracy = j["top1_accuracy"].get<double>();
    const auto& h = j.at("histogram");
    r.histogram = {h.at("lo"), h.at("hi"), h.at("counts").get<std::vector<std::uint64_t>>()};
    for (const auto& t : j.at("tokens")) {
      AuditRecord rec{t.at("patch"), t.at("word_id"), t.at("score"), std::nullopt};
      if (!t.at("ground_truth").is_null()) rec.ground_truth_word_id = t["ground_truth"].get<std::uint32_t>();
      r.records.push_back(rec);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoFailure, std::string("audit report: ") + e.what());
  }
  return r;
}

std::string audit_csv(const AuditReport& r) {
  std::string out = "patch,recalled_word,recalled_word_id,score,ground_truth_word_id\n";
  char buf[160];
  for (const auto& rec : r.records) {
    const std::string word = rec.recalled_word_id < r.words.size() ? r.words[rec.recalled_word_id] : "";
    std::snprintf(buf, sizeof buf, "%zu,%s,%u,%.9g,", rec.patch_index, word.c_str(),
                  rec.recalled_word_id, rec.score);
    out += buf;
    if (rec.ground_truth_word_id) out += std::to_string(*rec.ground_truth_word_id);
    out += '\n';
  }
  return out;
}

AuditReport run_audit(const Corpus& corpus, const Matrix& word_features, const AdapterParams& params,
                      std::string checkpoint_id, std::uint64_t seed) {
  const Matrix tokens = adapter_forward(params, Matrix::from_embedding(corpus.all_patches()));
  const auto recalled = recall_words(tokens, word_features);

  AuditReport report;
  report.checkpoint_id = std::move(checkpoint_id);
  report.seed = seed;
  report.word_list_hash = hex64(corpus.words.hash());
  report.words = corpus.words.words();
  const bool has_truth = corpus.gt_words.size() == corpus.grids.size();
  std::vector<double> scores;
  std::size_t index = 0;
  for (std::size_t img = 0; img < corpus.grids.size(); ++img) {
    for (std::size_t p = 0; p < corpus.grids[img].patch_count(); ++p, ++index) {
      AuditRecord rec{index, recalled[index].word_id, recalled[index].score, std::nullopt};
      if (has_truth) rec.ground_truth_word_id = corpus.gt_words[img].at(p);
      report.records.push_back(rec);
      scores.push_back(rec.score);
    }
  }
  if (has_truth) report.top1_accuracy = recall_accuracy(report.records);
  report.histogram = similarity_histogram(scores, kAuditHistogramBins, -1.0, 1.0);
  return report;
}

}  // namespace sea
