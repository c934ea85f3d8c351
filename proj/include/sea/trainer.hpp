// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sea/adapter.hpp"
#include "sea/config.hpp"
#include "sea/labeling.hpp"
#include "sea/losses.hpp"
#include "sea/rng.hpp"
#include "sea/synthetic.hpp"
#include "sea/tensor_file.hpp"
#include "sea/toylm.hpp"

namespace sea {

/// Trainable state: adapter, temperature and their AdamW moments. The LM,
/// embedding table and patch features live elsewhere and are never touched.
struct TrainState {
  AdapterParams params;
  TemperatureParam temp;
  AdapterParams m, v;
  double m_log_tau = 0.0;
  double v_log_tau = 0.0;
  std::uint64_t step = 0;
  Rng rng;

  bool operator==(const TrainState& o) const {
    return params == o.params && temp.log_tau == o.temp.log_tau && m == o.m && v == o.v &&
           m_log_tau == o.m_log_tau && v_log_tau == o.v_log_tau && step == o.step;
  }
};

TrainState init_train_state(const TrainConfig& config, std::size_t d_v, std::size_t d_llm);

TensorSet checkpoint_tensors(const TrainState& state);
TrainState state_from_checkpoint(const TensorSet& set, std::uint64_t seed);

/// Linear warmup to base_lr, then half-cosine decay to zero at total_steps.
double cosine_lr(std::size_t step, const TrainConfig& config);

struct Gradients {
  AdapterGrads adapter;
  double log_tau = 0.0;
};

/// Decoupled weight decay (adapter weights only), bias-corrected moments.
/// Throws NonFiniteGradient before touching the state.
void adamw_update(TrainState& state, const Gradients& grads, double lr, const TrainConfig& config);

/// Read-only inputs of a run.
struct Dataset {
  Corpus corpus;
  ToyLm lm;
  std::vector<SemanticLabelSet> labels;  // one per patch, indexed globally
  Matrix word_features;                  // mean-token word features, q x d_llm

  Dataset(Corpus corpus, ToyLm lm, std::vector<SemanticLabelSet> labels);
  std::span<const SemanticLabelSet> labels_of(std::size_t image) const;
  /// Hash of every byte the trainer must not modify.
  std::uint64_t frozen_hash() const;
};

struct StepMetrics {
  std::uint64_t step = 0;
  double loss = 0.0;
  double loss_g = 0.0;
  double loss_a = 0.0;
  double tau = 0.0;
  double lr = 0.0;
  std::size_t pairs = 0;
};

/// Images used at a step; epochs are reshuffled from the seed.
std::vector<std::size_t> batch_indices(std::uint64_t step, std::size_t batch_size,
                                       std::size_t image_count, const Rng& rng);

struct StepResult {
  StepMetrics metrics;
  Gradients grads;
  LossBundle loss_g;  // visual-token gradients of L_g alone
  LossBundle loss_a;  // visual-token and log_tau gradients of L_a alone (empty when N = 0)
};

/// Losses and gradients for the batch at `state.step`, without updating.
StepResult evaluate_step(const Dataset& data, std::span<const std::size_t> images,
                         const TrainState& state, const TrainConfig& config);

/// One optimizer step on the scheduled batch.
StepMetrics pretrain_step(const Dataset& data, TrainState& state, const TrainConfig& config);

std::string metrics_to_jsonl(const StepMetrics& m);

struct RunResult {
  TrainState state;
  std::vector<StepMetrics> metrics;
  std::filesystem::path final_checkpoint;
};

/// Trains from initialization, or from `resume` when given, writing
/// checkpoint_<step>.sea files, final.sea and metrics.jsonl under `out_dir`.
RunResult run_pretraining(const TrainConfig& config, const Dataset& data,
                          const std::filesystem::path& out_dir,
                          const std::optional<std::filesystem::path>& resume = std::nullopt);

/// Loads corpus and LM, and reads (or extracts and caches) the labels.
Dataset prepare_dataset(const TrainConfig& config, const std::filesystem::path& out_dir);

}  // namespace sea
