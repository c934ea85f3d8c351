// SPDX-License-Identifier: Apache-2.0
#include "sea/config.hpp"

#include <cstdlib>
#include <set>

#include "sea/io.hpp"

namespace sea {

using nlohmann::json;

void TrainConfig::validate() const {
  if (warmup_steps > total_steps) {
    throw Error(ErrorCode::ConfigError, "warmup_steps must not exceed total_steps");
  }
  if (!(base_lr > 0.0)) throw Error(ErrorCode::ConfigError, "base_lr must be > 0");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::NegativeLambda, "lambda must be >= 0");
  if (top_n == 0) throw Error(ErrorCode::ConfigError, "top_n must be >= 1");
  if (window_k == 0) throw Error(ErrorCode::ConfigError, "window_k must be >= 1");
  if (batch_size == 0) throw Error(ErrorCode::ConfigError, "batch_size must be >= 1");
  if (!(weight_decay >= 0.0)) throw Error(ErrorCode::ConfigError, "weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw Error(ErrorCode::ConfigError, "betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw Error(ErrorCode::ConfigError, "adam_eps must be > 0");
}

json to_json(const TrainConfig& c) {
  return {
      {"corpus", c.corpus},
      {"labels", c.labels},
      {"output", c.output},
      {"lambda", c.lambda},
      {"top_n", c.top_n},
      {"window_k", c.window_k},
      {"negate", c.negate},
      {"batch_size", c.batch_size},
      {"total_steps", c.total_steps},
      {"warmup_steps", c.warmup_steps},
      {"base_lr", c.base_lr},
      {"weight_decay", c.weight_decay},
      {"beta1", c.beta1},
      {"beta2", c.beta2},
      {"adam_eps", c.adam_eps},
      {"log_tau_init", c.log_tau_init},
      {"adapter", std::string(to_string(c.adapter))},
      {"d_hidden", c.d_hidden},
      {"objective", c.objective == Objective::combined ? "combined" : "generation_only"},
      {"checkpoint_every", c.checkpoint_every},
      {"seed", c.seed},
  };
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  TrainConfig c;
  const json defaults = to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
  }
  try {
    const auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("corpus", c.corpus);
    get("labels", c.labels);
    get("output", c.output);
    get("lambda", c.lambda);
    get("top_n", c.top_n);
    get("window_k", c.window_k);
    get("negate", c.negate);
    get("batch_size", c.batch_size);
    get("total_steps", c.total_steps);
    get("warmup_steps", c.warmup_steps);
    get("base_lr", c.base_lr);
    get("weight_decay", c.weight_decay);
    get("beta1", c.beta1);
    get("beta2", c.beta2);
    get("adam_eps", c.adam_eps);
    get("log_tau_init", c.log_tau_init);
    get("d_hidden", c.d_hidden);
    get("checkpoint_every", c.checkpoint_every);
    get("seed", c.seed);
    if (j.contains("adapter")) {
      try {
        c.adapter = parse_adapter_arch(j.at("adapter").get<std::string>());
      } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, e.what());
      }
    }
    if (j.contains("objective")) {
      const auto o = j.at("objective").get<std::string>();
      if (o == "combined") {
        c.objective = Objective::combined;
      } else if (o == "generation_only") {
        c.objective = Objective::generation_only;
      } else {
        throw Error(ErrorCode::ConfigError, "objective must be combined or generation_only");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
  return train_config_from_json(j);
}

std::uint64_t resolve_seed(const std::uint64_t* flag, const std::uint64_t* config,
                           std::uint64_t fallback) {
  if (flag != nullptr) return *flag;
  if (config != nullptr) return *config;
  if (const char* env = std::getenv("SEA_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (end != nullptr && *end == '\0') return v;
    throw Error(ErrorCode::ConfigError, "SEA_SEED is not an unsigned integer");
  }
  return fallback;
}

}  // namespace sea
