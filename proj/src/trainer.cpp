// SPDX-License-Identifier: Apache-2.0
#include "sea/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <sstream>

#include "sea/io.hpp"
#include "sea/sampling.hpp"

namespace sea {
namespace {

// Derived-stream tags local to the trainer.
constexpr std::uint64_t kBatchStream = 0xba7c;

bool all_finite(const Matrix& m) {
  for (double v : m.data())
    if (!std::isfinite(v)) return false;
  return true;
}

void adamw_tensor(Matrix& p, Matrix& m, Matrix& v, const Matrix& g, double lr, double decay,
                  const TrainConfig& c, double bc1, double bc2) {
  auto pd = p.data();
  auto md = m.data();
  auto vd = v.data();
  auto gd = g.data();
  for (std::size_t i = 0; i < pd.size(); ++i) {
    pd[i] -= lr * decay * pd[i];
    md[i] = c.beta1 * md[i] + (1.0 - c.beta1) * gd[i];
    vd[i] = c.beta2 * vd[i] + (1.0 - c.beta2) * gd[i] * gd[i];
    pd[i] -= lr * (md[i] / bc1) / (std::sqrt(vd[i] / bc2) + c.adam_eps);
  }
}

}  // namespace

TrainState init_train_state(const TrainConfig& config, std::size_t d_v, std::size_t d_llm) {
  TrainState s;
  const std::size_t d_h = config.d_hidden == 0 ? d_llm : config.d_hidden;
  s.params = init_adapter(config.adapter, d_v, d_h, d_llm, config.seed);
  s.temp.log_tau = config.log_tau_init;
  s.m = zeros_like(s.params);
  s.v = zeros_like(s.params);
  s.rng = Rng(config.seed);
  return s;
}

TensorSet checkpoint_tensors(const TrainState& state) {
  TensorSet set;
  append_adapter(set, state.params, "adapter");
  set.add_scalar("temperature.log_tau", state.temp.log_tau);
  append_adapter(set, state.m, "adam.m");
  append_adapter(set, state.v, "adam.v");
  set.add_scalar("adam.m.log_tau", state.m_log_tau);
  set.add_scalar("adam.v.log_tau", state.v_log_tau);
  set.add_scalar("state.step", static_cast<double>(state.step));
  return set;
}

TrainState state_from_checkpoint(const TensorSet& set, std::uint64_t seed) {
  TrainState s;
  s.params = load_adapter(set, "adapter");
  s.temp.log_tau = set.scalar("temperature.log_tau");
  s.m = load_adapter(set, "adam.m");
  s.v = load_adapter(set, "adam.v");
  s.m_log_tau = set.scalar("adam.m.log_tau");
  s.v_log_tau = set.scalar("adam.v.log_tau");
  s.step = static_cast<std::uint64_t>(set.scalar("state.step"));
  s.rng = Rng(seed);
  return s;
}

double cosine_lr(std::size_t step, const TrainConfig& config) {
  if (step > config.total_steps) {
    throw Error(ErrorCode::StepOutOfRange,
                std::to_string(step) + " > " + std::to_string(config.total_steps));
  }
  if (step < config.warmup_steps) {
    return config.base_lr * static_cast<double>(step) / static_cast<double>(config.warmup_steps);
  }
  const std::size_t decay = config.total_steps - config.warmup_steps;
  if (decay == 0) return config.base_lr;
  const double progress = static_cast<double>(step - config.warmup_steps) / static_cast<double>(decay);
  return 0.5 * config.base_lr * (1.0 + std::cos(std::numbers::pi * progress));
}

void adamw_update(TrainState& state, const Gradients& grads, double lr, const TrainConfig& config) {
  const auto& g = grads.adapter;
  if (!all_finite(g.w1) || !all_finite(g.b1) || !all_finite(g.w2) || !all_finite(g.b2) ||
      !std::isfinite(grads.log_tau)) {
    throw Error(ErrorCode::NonFiniteGradient, "step " + std::to_string(state.step) + " aborted");
  }
  const double t = static_cast<double>(state.step + 1);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  const double wd = config.weight_decay;
  adamw_tensor(state.params.w1, state.m.w1, state.v.w1, g.w1, lr, wd, config, bc1, bc2);
  adamw_tensor(state.params.b1, state.m.b1, state.v.b1, g.b1, lr, 0.0, config, bc1, bc2);
  adamw_tensor(state.params.w2, state.m.w2, state.v.w2, g.w2, lr, wd, config, bc1, bc2);
  adamw_tensor(state.params.b2, state.m.b2, state.v.b2, g.b2, lr, 0.0, config, bc1, bc2);

  Matrix p(1, 1, state.temp.log_tau), m(1, 1, state.m_log_tau), v(1, 1, state.v_log_tau);
  adamw_tensor(p, m, v, Matrix(1, 1, grads.log_tau), lr, 0.0, config, bc1, bc2);
  state.temp.log_tau = p(0, 0);
  state.m_log_tau = m(0, 0);
  state.v_log_tau = v(0, 0);
  ++state.step;
}

Dataset::Dataset(Corpus c, ToyLm model, std::vector<SemanticLabelSet> l)
    : corpus(std::move(c)), lm(std::move(model)), labels(std::move(l)) {
  if (corpus.grids.empty()) throw Error(ErrorCode::EmptyDataset, "no images");
  if (labels.size() != corpus.total_patches()) {
    throw Error(ErrorCode::MismatchedBatch, std::to_string(labels.size()) + " label sets for " +
                                                std::to_string(corpus.total_patches()) + " patches");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].patch_index != i) {
      throw Error(ErrorCode::MismatchedBatch, "label cache is not in patch order");
    }
    for (const auto& l : labels[i].labels) {
      if (l.word_id >= corpus.words.size()) throw Error(ErrorCode::WordIdOutOfRange, "label cache");
    }
  }
  if (corpus.captions.size() != corpus.grids.size()) {
    throw Error(ErrorCode::MismatchedBatch, "captions not aligned with images");
  }
  word_features = label_text_features(lm.table(), Tokenizer(corpus.tokenizer), corpus.words.words());
}

std::span<const SemanticLabelSet> Dataset::labels_of(std::size_t image) const {
  std::size_t offset = 0;
  for (std::size_t i = 0; i < image; ++i) offset += corpus.grids[i].patch_count();
  return std::span(labels).subspan(offset, corpus.grids[image].patch_count());
}

std::uint64_t Dataset::frozen_hash() const {
  return fnv1a(hex64(lm.frozen_hash()) + hex64(corpus.feature_hash()));
}

std::vector<std::size_t> batch_indices(std::uint64_t step, std::size_t batch_size,
                                       std::size_t image_count, const Rng& rng) {
  if (image_count == 0) throw Error(ErrorCode::EmptyDataset, "no images");
  std::vector<std::size_t> out;
  std::uint64_t cached_epoch = ~std::uint64_t{0};
  std::vector<std::size_t> perm(image_count);
  for (std::size_t j = 0; j < batch_size; ++j) {
    const std::uint64_t global = step * batch_size + j;
    const std::uint64_t epoch = global / image_count;
    if (epoch != cached_epoch) {
      for (std::size_t i = 0; i < image_count; ++i) perm[i] = i;
      Rng shuffle = rng.derive({stream_tag::shuffle, epoch});
      for (std::size_t i = image_count; i > 1; --i) {
        std::swap(perm[i - 1], perm[shuffle.uniform_index(i)]);
      }
      cached_epoch = epoch;
    }
    out.push_back(perm[global % image_count]);
  }
  return out;
}

StepResult evaluate_step(const Dataset& data, std::span<const std::size_t> images,
                         const TrainState& state, const TrainConfig& config) {
  const auto& corpus = data.corpus;
  const std::size_t b = images.size();
  std::vector<std::size_t> offset(b + 1, 0);
  for (std::size_t i = 0; i < b; ++i) offset[i + 1] = offset[i] + corpus.grids.at(images[i]).patch_count();
  const std::size_t d_v = corpus.grids.front().features.cols();

  Matrix patches(offset[b], d_v);
  std::vector<PatchGrid> grids;
  std::vector<std::span<const SemanticLabelSet>> label_spans;
  for (std::size_t i = 0; i < b; ++i) {
    const auto& g = corpus.grids[images[i]];
    const auto src = g.features.data();
    std::copy(src.begin(), src.end(), patches.row(offset[i]).begin());
    grids.push_back(g);
    label_spans.push_back(data.labels_of(images[i]));
  }
  const Matrix tokens = adapter_forward(state.params, patches);
  const std::size_t d = tokens.cols();

  StepResult result;
  result.metrics.step = state.step + 1;
  result.metrics.tau = state.temp.tau();

  // Alignment objective over the deduplicated contrastive batch.
  const Rng batch_rng = state.rng.derive({kBatchStream, state.step});
  const auto pairs = build_alignment_batch(grids, label_spans, config.window_k, batch_rng);
  result.metrics.pairs = pairs.size();
  if (!pairs.empty()) {
    Matrix vis(pairs.size(), d), txt(pairs.size(), d);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto row = offset[pairs[i].grid_slot] + pairs[i].patch_index;
      std::ranges::copy(tokens.row(row), vis.row(i).begin());
      std::ranges::copy(data.word_features.row(pairs[i].word_id), txt.row(i).begin());
    }
    const LossBundle la = alignment_loss(vis, txt, state.temp);
    Matrix full(tokens.rows(), d);
    const Matrix& g = la.grad(GradGroup::visual_tokens);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      std::ranges::copy(g.row(i), full.row(offset[pairs[i].grid_slot] + pairs[i].patch_index).begin());
    }
    result.loss_a.value = la.value;
    result.loss_a.grads[GradGroup::visual_tokens] = std::move(full);
    result.loss_a.grads[GradGroup::log_tau] = la.grad(GradGroup::log_tau);
  }

  // Generation objective: caption tokens after the visual prefix.
  std::vector<LmPass> passes(b);
  std::vector<std::size_t> logit_offset(b + 1, 0);
  for (std::size_t i = 0; i < b; ++i) {
    logit_offset[i + 1] = logit_offset[i] + corpus.captions[images[i]].size() - 1;
  }
  const auto count = static_cast<std::ptrdiff_t>(b);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto& caption = corpus.captions[images[i]];
    Matrix visual(offset[i + 1] - offset[i], d);
    for (std::size_t r = 0; r < visual.rows(); ++r) {
      std::ranges::copy(tokens.row(offset[i] + r), visual.row(r).begin());
    }
    const ModelInput input = build_model_input(visual, data.lm.table(), caption);
    std::vector<std::size_t> positions;
    for (std::size_t t = 0; t + 1 < caption.size(); ++t) positions.push_back(input.boundary + t);
    passes[i] = data.lm.forward_pass(input, positions);
  }
  Matrix logits(logit_offset[b], data.lm.vocab_size());
  std::vector<std::uint32_t> targets(logit_offset[b]);
  std::vector<std::uint8_t> mask(logit_offset[b], 1);
  for (std::size_t i = 0; i < b; ++i) {
    const auto& caption = corpus.captions[images[i]];
    for (std::size_t t = 0; t + 1 < caption.size(); ++t) {
      std::ranges::copy(passes[i].logits.row(t), logits.row(logit_offset[i] + t).begin());
      targets[logit_offset[i] + t] = caption[t + 1];
    }
  }
  const LossBundle lg = generation_loss(logits, targets, mask);
  const Matrix& dlogits = lg.grad(GradGroup::logits);
  Matrix gen_grad(tokens.rows(), d);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    Matrix slice(logit_offset[i + 1] - logit_offset[i], dlogits.cols());
    for (std::size_t r = 0; r < slice.rows(); ++r) {
      std::ranges::copy(dlogits.row(logit_offset[i] + r), slice.row(r).begin());
    }
    const Matrix dinput = data.lm.backward_input(passes[i], slice);
    for (std::size_t r = 0; r < offset[i + 1] - offset[i]; ++r) {
      std::ranges::copy(dinput.row(r), gen_grad.row(offset[i] + r).begin());
    }
  }
  result.loss_g.value = lg.value;
  result.loss_g.grads[GradGroup::visual_tokens] = std::move(gen_grad);

  result.metrics.loss_g = lg.value;
  result.metrics.loss_a = result.loss_a.value;
  const LossBundle total = config.objective == Objective::generation_only
                               ? result.loss_g
                               : combined_loss(result.loss_g, result.loss_a, config.lambda);
  result.metrics.loss = total.value;

  auto back = adapter_backward(state.params, patches, total.grad(GradGroup::visual_tokens));
  result.grads.adapter = std::move(back.params);
  result.grads.log_tau = total.has(GradGroup::log_tau) ? total.grad(GradGroup::log_tau)(0, 0) : 0.0;
  return result;
}

StepMetrics pretrain_step(const Dataset& data, TrainState& state, const TrainConfig& config) {
  const auto images =
      batch_indices(state.step, config.batch_size, data.corpus.grids.size(), state.rng);
  StepResult r = evaluate_step(data, images, state, config);
  if (r.metrics.pairs == 0 && config.objective == Objective::combined) {
    std::cerr << "step " << r.metrics.step << ": no alignment pairs, using L = L_g\n";
  }
  r.metrics.lr = cosine_lr(state.step, config);
  adamw_update(state, r.grads, r.metrics.lr, config);
  return r.metrics;
}

std::string metrics_to_jsonl(const StepMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"step\":%llu,\"loss\":%.17g,\"loss_g\":%.17g,\"loss_a\":%.17g,\"tau\":%.17g,"
                "\"lr\":%.17g,\"pairs\":%zu}\n",
                static_cast<unsigned long long>(m.step), m.loss, m.loss_g, m.loss_a, m.tau, m.lr,
                m.pairs);
  return buf;
}

namespace {

void save_checkpoint(const std::filesystem::path& path, const TrainState& state) {
  try {
    save_tensors(path, checkpoint_tensors(state));
  } catch (const Error& e) {
    throw Error(ErrorCode::CheckpointWriteFailure, e.what());
  }
}

std::string render_metrics(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l;
  return out;
}

}  // namespace

RunResult run_pretraining(const TrainConfig& config, const Dataset& data,
                          const std::filesystem::path& out_dir,
                          const std::optional<std::filesystem::path>& resume) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::CheckpointWriteFailure, "cannot create " + out_dir.string());

  const std::size_t d_v = data.corpus.grids.front().features.cols();
  RunResult result;
  std::vector<std::string> lines;
  if (resume) {
    result.state = state_from_checkpoint(load_tensors(*resume), config.seed);
    const auto log = out_dir / "metrics.jsonl";
    if (std::filesystem::exists(log)) {
      std::istringstream in(read_file(log));
      for (std::string line; std::getline(in, line);) {
        const auto j = nlohmann::json::parse(line);
        if (j.at("step").get<std::uint64_t>() <= result.state.step) lines.push_back(line + "\n");
      }
    }
  } else {
    result.state = init_train_state(config, d_v, data.lm.dim());
  }
  if (result.state.params.d_in() != d_v || result.state.params.d_out() != data.lm.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "adapter shape does not match corpus and LM");
  }
  write_file_atomic(out_dir / "config.json", to_json(config).dump(2) + "\n");

  while (result.state.step < config.total_steps) {
    const auto m = pretrain_step(data, result.state, config);
    result.metrics.push_back(m);
    lines.push_back(metrics_to_jsonl(m));
    if (config.checkpoint_every != 0 && result.state.step % config.checkpoint_every == 0) {
      save_checkpoint(out_dir / ("checkpoint_" + std::to_string(result.state.step) + ".sea"),
                      result.state);
      write_file_atomic(out_dir / "metrics.jsonl", render_metrics(lines));
    }
  }
  result.final_checkpoint = out_dir / "final.sea";
  save_checkpoint(result.final_checkpoint, result.state);
  write_file_atomic(out_dir / "metrics.jsonl", render_metrics(lines));
  return result;
}

Dataset prepare_dataset(const TrainConfig& config, const std::filesystem::path& out_dir) {
  if (config.corpus.empty()) throw Error(ErrorCode::ConfigError, "config has no corpus path");
  Corpus corpus = load_corpus(config.corpus);
  ToyLm lm = load_corpus_lm(config.corpus, corpus);
  std::filesystem::path labels_path = config.labels;
  if (labels_path.empty()) {
    std::filesystem::create_directories(out_dir);
    labels_path = out_dir / "labels.jsonl";
    const auto extraction =
        extract_semantic_labels(corpus.all_patches(), corpus.text_features, config.top_n, config.negate);
    save_label_cache(labels_path, extraction);
  }
  return Dataset(std::move(corpus), std::move(lm), load_label_cache(labels_path));
}

}  // namespace sea
