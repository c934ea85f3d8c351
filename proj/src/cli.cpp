// SPDX-License-Identifier: Apache-2.0
#include "sea/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "sea/audit.hpp"
#include "sea/config.hpp"
#include "sea/gradcheck.hpp"
#include "sea/io.hpp"
#include "sea/labeling.hpp"
#include "sea/synthetic.hpp"
#include "sea/tensor_file.hpp"
#include "sea/trainer.hpp"

namespace sea {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void print_resolved(const char* command, const json& config) {
  std::cout << "# sea " << command << " resolved config\n" << config.dump(2) << "\n";
}

json usage_to_json(const UsageReport& u, const WordList& words, std::size_t top_n, bool negate) {
  return {{"word_count", words.size()},
          {"word_list_hash", hex64(words.hash())},
          {"top_n", top_n},
          {"negate", negate},
          {"selections", u.selections},
          {"utilization_rate", u.utilization_rate},
          {"below_zero_fraction", u.below_zero_fraction},
          {"per_word_mean_score", u.per_word_mean_score},
          {"per_word_count", u.per_word_count},
          {"histogram", {{"lo", u.histogram.lo}, {"hi", u.histogram.hi}, {"counts", u.histogram.counts}}}};
}

Histogram histogram_from_json(const json& h) {
  return {h.at("lo"), h.at("hi"), h.at("counts").get<std::vector<std::uint64_t>>()};
}

struct GenSynthArgs {
  std::string out;
  std::string words;
  SyntheticCorpusSpec spec;
  std::optional<std::uint64_t> seed;
};

int gen_synth(GenSynthArgs& a) {
  a.spec.seed = resolve_seed(a.seed ? &*a.seed : nullptr, nullptr);
  std::optional<WordList> source;
  if (!a.words.empty()) source = WordList::load(a.words);
  print_resolved("gen-synth", {{"out", a.out},
                               {"words", a.words},
                               {"vocab_size", a.spec.vocab_size},
                               {"d_v", a.spec.d_v},
                               {"d_llm", a.spec.d_llm},
                               {"height", a.spec.height},
                               {"width", a.spec.width},
                               {"images", a.spec.images},
                               {"noise_sigma", a.spec.noise_sigma},
                               {"seed", a.spec.seed}});
  const auto synth = generate_synthetic_corpus(a.spec, source ? &*source : nullptr);
  save_corpus(a.out, synth.corpus, synth.lm);
  std::cerr << "wrote " << synth.corpus.grids.size() << " images, " << synth.corpus.words.size()
            << " words to " << a.out << "\n";
  return 0;
}

struct LabelArgs {
  std::string corpus;
  std::string out;
  std::string usage;
  std::size_t top_n = kDefaultTopN;
  bool negate = false;
};

int label(LabelArgs& a) {
  if (a.out.empty()) a.out = (fs::path(a.corpus) / "labels.jsonl").string();
  if (a.usage.empty()) a.usage = (fs::path(a.out).parent_path() / "usage.json").string();
  print_resolved("label", {{"corpus", a.corpus}, {"out", a.out}, {"usage", a.usage},
                           {"top_n", a.top_n}, {"negate", a.negate}});
  const Corpus corpus = load_corpus(a.corpus);
  const auto extraction = extract_labels_with_candidates(corpus.all_patches(), corpus.text_features,
                                                         a.top_n, a.negate);
  save_label_cache(a.out, extraction.sets);
  const auto usage = vocabulary_usage_report(extraction.sets, extraction.candidate_scores, corpus.words);
  write_file_atomic(a.usage, usage_to_json(usage, corpus.words, a.top_n, a.negate).dump(2) + "\n");
  std::size_t empty = 0;
  for (const auto& s : extraction.sets) empty += s.labels.empty() ? 1 : 0;
  std::printf("patches %zu, empty label sets %zu, utilization %.4f, below-zero %.4f\n",
              extraction.sets.size(), empty, usage.utilization_rate, usage.below_zero_fraction);
  return 0;
}

struct PretrainArgs {
  std::string config;
  std::string resume;
  std::string output;
  std::optional<std::uint64_t> seed;
};

int pretrain(PretrainArgs& a) {
  const json raw = json::parse(read_file(a.config));
  TrainConfig config = train_config_from_json(raw);
  const std::uint64_t cfg_seed = config.seed;
  config.seed = resolve_seed(a.seed ? &*a.seed : nullptr, raw.contains("seed") ? &cfg_seed : nullptr);
  if (!a.output.empty()) config.output = a.output;
  print_resolved("pretrain", to_json(config));

  const Dataset data = prepare_dataset(config, config.output);
  const auto hash_before = data.frozen_hash();
  std::optional<fs::path> resume;
  if (!a.resume.empty()) resume = a.resume;
  const auto result = run_pretraining(config, data, config.output, resume);
  if (data.frozen_hash() != hash_before) {
    throw Error(ErrorCode::InvalidArgument, "frozen components changed during training");
  }
  if (!result.metrics.empty()) {
    const auto& first = result.metrics.front();
    const auto& last = result.metrics.back();
    std::printf("steps %llu  L %.4f -> %.4f  L_g %.4f -> %.4f  L_a %.4f -> %.4f  tau %.4f\n",
                static_cast<unsigned long long>(result.state.step), first.loss, last.loss,
                first.loss_g, last.loss_g, first.loss_a, last.loss_a, result.state.temp.tau());
  }
  std::printf("checkpoint %s\nfrozen hash %s\n", result.final_checkpoint.string().c_str(),
              hex64(hash_before).c_str());
  return 0;
}

struct AuditArgs {
  std::string corpus;
  std::string checkpoint;
  std::string out = "audit.json";
  std::string csv;
  std::string hist;
  std::string arch = "mlp2";
  std::optional<std::uint64_t> seed;
};

int audit(AuditArgs& a) {
  const std::uint64_t seed = resolve_seed(a.seed ? &*a.seed : nullptr, nullptr);
  print_resolved("audit", {{"corpus", a.corpus}, {"checkpoint", a.checkpoint}, {"out", a.out},
                           {"csv", a.csv}, {"hist", a.hist}, {"arch", a.arch}, {"seed", seed}});
  const Corpus corpus = load_corpus(a.corpus);
  const ToyLm lm = load_corpus_lm(a.corpus, corpus);
  const Matrix word_features = label_text_features(lm.table(), Tokenizer(corpus.tokenizer),
                                                   corpus.words.words());
  AdapterParams params;
  std::string checkpoint_id;
  if (a.checkpoint.empty()) {
    TrainConfig c;
    c.adapter = parse_adapter_arch(a.arch);
    c.seed = seed;
    params = init_train_state(c, corpus.grids.front().features.cols(), lm.dim()).params;
    checkpoint_id = "init:" + a.arch;
  } else {
    params = load_adapter(load_tensors(a.checkpoint), "adapter");
    checkpoint_id = hex64(fnv1a(read_file(a.checkpoint)));
  }
  const AuditReport report = run_audit(corpus, word_features, params, checkpoint_id, seed);
  write_file_atomic(a.out, to_json(report).dump(1) + "\n");
  if (!a.csv.empty()) write_file_atomic(a.csv, audit_csv(report));
  if (!a.hist.empty()) write_file_atomic(a.hist, report.histogram.to_gnuplot());
  if (report.top1_accuracy) {
    std::printf("tokens %zu  top-1 recall accuracy %.4f\n", report.records.size(), *report.top1_accuracy);
  } else {
    std::printf("tokens %zu  (no ground truth)\n", report.records.size());
  }
  return 0;
}

int gradcheck(std::optional<std::uint64_t> seed_flag, std::size_t instances) {
  const std::uint64_t seed = resolve_seed(seed_flag ? &*seed_flag : nullptr, nullptr);
  print_resolved("gradcheck", {{"seed", seed}, {"instances", instances}});
  bool ok = true;
  for (const auto& e : run_gradcheck(seed, instances)) {
    std::printf("%-32s max rel err %.3e  (tol %.0e)  %s\n", e.name.c_str(), e.max_rel_error,
                e.tolerance, e.pass() ? "ok" : "FAIL");
    ok = ok && e.pass();
  }
  return ok ? 0 : 1;
}

struct ReportArgs {
  std::string usage;
  std::string audit;
  std::string gnuplot;
  std::size_t width = 50;
};

int report(ReportArgs& a) {
  print_resolved("report", {{"usage", a.usage}, {"audit", a.audit}, {"gnuplot", a.gnuplot},
                            {"width", a.width}});
  if (a.usage.empty() == a.audit.empty()) {
    throw CLI::ValidationError("report", "give exactly one of --usage or --audit");
  }
  const json j = json::parse(read_file(a.usage.empty() ? a.audit : a.usage));
  const Histogram h = histogram_from_json(j.at("histogram"));
  if (!a.usage.empty()) {
    std::printf("label similarity distribution (selected labels, score > 0)\n");
    std::printf("utilization %.4f  below-zero %.4f  selections %llu\n",
                j.at("utilization_rate").get<double>(), j.at("below_zero_fraction").get<double>(),
                j.at("selections").get<unsigned long long>());
  } else {
    std::printf("recalled-word similarity distribution\n");
    if (!j.at("top1_accuracy").is_null()) {
      std::printf("top-1 recall accuracy %.4f\n", j["top1_accuracy"].get<double>());
    }
  }
  std::fputs(h.counts.empty() ? "(empty histogram)\n" : h.to_text(a.width).c_str(), stdout);
  if (!a.gnuplot.empty()) write_file_atomic(a.gnuplot, h.to_gnuplot());
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Supervised embedding alignment toolkit", "sea"};
  app.require_subcommand(1);

  GenSynthArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synth", "Write a synthetic corpus with planted ground truth");
  gen_cmd->add_option("--out", gen.out, "Output corpus directory")->required();
  gen_cmd->add_option("--words", gen.words, "Word list to draw the vocabulary from");
  gen_cmd->add_option("--vocab", gen.spec.vocab_size, "Vocabulary size")->capture_default_str();
  gen_cmd->add_option("--d-v", gen.spec.d_v, "Vision feature dim")->capture_default_str();
  gen_cmd->add_option("--d-llm", gen.spec.d_llm, "LM embedding dim")->capture_default_str();
  gen_cmd->add_option("--height", gen.spec.height, "Patch grid height")->capture_default_str();
  gen_cmd->add_option("--width", gen.spec.width, "Patch grid width")->capture_default_str();
  gen_cmd->add_option("--images", gen.spec.images, "Image count")->capture_default_str();
  gen_cmd->add_option("--noise", gen.spec.noise_sigma, "Feature noise std")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Master seed");

  LabelArgs lab;
  auto* label_cmd = app.add_subcommand("label", "Extract per-patch semantic labels");
  label_cmd->add_option("--corpus", lab.corpus, "Corpus directory")->required();
  label_cmd->add_option("--out", lab.out, "Label cache (JSON lines)");
  label_cmd->add_option("--usage", lab.usage, "Vocabulary usage report (JSON)");
  label_cmd->add_option("--top-n", lab.top_n, "Labels kept per patch")->capture_default_str();
  label_cmd->add_flag("--negate", lab.negate, "Rank by negated cosine similarity");

  PretrainArgs pre;
  auto* pre_cmd = app.add_subcommand("pretrain", "Stage-1 adapter pre-training");
  pre_cmd->add_option("--config", pre.config, "Run config (JSON)")->required();
  pre_cmd->add_option("--resume", pre.resume, "Checkpoint to resume from");
  pre_cmd->add_option("--output", pre.output, "Override the output directory");
  pre_cmd->add_option("--seed", pre.seed, "Override the seed");

  AuditArgs aud;
  auto* audit_cmd = app.add_subcommand("audit", "Recalled-word audit of visual tokens");
  audit_cmd->add_option("--corpus", aud.corpus, "Corpus directory")->required();
  audit_cmd->add_option("--checkpoint", aud.checkpoint, "Checkpoint (default: fresh adapter)");
  audit_cmd->add_option("--out", aud.out, "Report JSON")->capture_default_str();
  audit_cmd->add_option("--csv", aud.csv, "Per-token CSV");
  audit_cmd->add_option("--hist", aud.hist, "Histogram, gnuplot two-column text");
  audit_cmd->add_option("--arch", aud.arch, "Adapter for the fresh-init audit")->capture_default_str();
  audit_cmd->add_option("--seed", aud.seed, "Seed for the fresh-init audit");

  std::optional<std::uint64_t> grad_seed;
  std::size_t grad_instances = 20;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every backward pass");
  grad_cmd->add_option("--seed", grad_seed, "Seed");
  grad_cmd->add_option("--instances", grad_instances, "Random instances")->capture_default_str();

  ReportArgs rep;
  auto* report_cmd = app.add_subcommand("report", "Render a histogram from a usage or audit report");
  report_cmd->add_option("--usage", rep.usage, "usage.json from `sea label`");
  report_cmd->add_option("--audit", rep.audit, "Report from `sea audit`");
  report_cmd->add_option("--gnuplot", rep.gnuplot, "Also write two-column text here");
  report_cmd->add_option("--width", rep.width, "Bar width")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*gen_cmd) return gen_synth(gen);
    if (*label_cmd) return label(lab);
    if (*pre_cmd) return pretrain(pre);
    if (*audit_cmd) return audit(aud);
    if (*grad_cmd) return gradcheck(grad_seed, grad_instances);
    if (*report_cmd) return report(rep);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "sea: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "sea: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace sea
