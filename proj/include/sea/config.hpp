// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "sea/adapter.hpp"
#include "sea/labeling.hpp"
#include "sea/sampling.hpp"

namespace sea {

enum class Objective { combined, generation_only };

/// Stage-1 hyperparameters. Read from JSON with every key optional and
/// unknown keys rejected.
struct TrainConfig {
  // paths
  std::string corpus;
  std::string labels;  // empty: extract and cache under output
  std::string output = "run";

  double lambda = 1.0;
  std::size_t top_n = kDefaultTopN;
  std::size_t window_k = kDefaultWindow;
  bool negate = false;
  std::size_t batch_size = 8;
  std::size_t total_steps = 1000;
  std::size_t warmup_steps = 30;
  double base_lr = 2e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double log_tau_init = 0.0;
  AdapterArch adapter = AdapterArch::mlp2;
  std::size_t d_hidden = 0;  // 0: same as the LM width
  Objective objective = Objective::combined;
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);
TrainConfig load_train_config(const std::string& path);

/// Flag > config > SEA_SEED > fallback.
std::uint64_t resolve_seed(const std::uint64_t* flag, const std::uint64_t* config,
                           std::uint64_t fallback = 0);

}  // namespace sea
