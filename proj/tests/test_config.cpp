// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>

#include "sea/config.hpp"
#include "sea/error.hpp"
#include "sea/io.hpp"

using namespace sea;
using nlohmann::json;

TEST_CASE("default configuration snapshot") {
  const TrainConfig c;
  CHECK(c.top_n == 10);
  CHECK(c.window_k == 2);
  CHECK(c.log_tau_init == 0.0);
  CHECK(c.adapter == AdapterArch::mlp2);
  CHECK(c.lambda == 1.0);
  CHECK(c.negate == false);
  CHECK(c.objective == Objective::combined);
  CHECK(c.beta1 == 0.9);
  CHECK(c.beta2 == 0.999);
  CHECK(c.adam_eps == 1e-8);
  CHECK(c.weight_decay == 0.0);
  CHECK(to_json(c) == json::parse(R"({
    "corpus": "", "labels": "", "output": "run", "lambda": 1.0, "top_n": 10, "window_k": 2,
    "negate": false, "batch_size": 8, "total_steps": 1000, "warmup_steps": 30, "base_lr": 0.002,
    "weight_decay": 0.0, "beta1": 0.9, "beta2": 0.999, "adam_eps": 1e-08, "log_tau_init": 0.0,
    "adapter": "mlp2", "d_hidden": 0, "objective": "combined", "checkpoint_every": 0, "seed": 0
  })"));
}

TEST_CASE("config JSON round-trips and fills defaults") {
  TrainConfig c;
  c.lambda = 0.5;
  c.adapter = AdapterArch::linear;
  c.objective = Objective::generation_only;
  c.seed = 99;
  const auto back = train_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  const auto partial = train_config_from_json(json::parse(R"({"lambda": 2})"));
  CHECK(partial.lambda == 2.0);
  CHECK(partial.top_n == 10);
}

TEST_CASE("config rejects unknown keys, bad types and broken invariants") {
  const auto code = [](const char* text) {
    try {
      train_config_from_json(json::parse(text));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code(R"({"lamda": 1})") == ErrorCode::ConfigError);
  CHECK(code(R"({"top_n": "ten"})") == ErrorCode::ConfigError);
  CHECK(code(R"({"top_n": 0})") == ErrorCode::ConfigError);
  CHECK(code(R"({"base_lr": 0})") == ErrorCode::ConfigError);
  CHECK(code(R"({"total_steps": 10, "warmup_steps": 11})") == ErrorCode::ConfigError);
  CHECK(code(R"({"lambda": -1})") == ErrorCode::NegativeLambda);
  CHECK(code(R"({"adapter": "conv"})") == ErrorCode::ConfigError);
  CHECK(code(R"([1, 2])") == ErrorCode::ConfigError);
}

TEST_CASE("shipped synthetic config keeps the reference setup") {
  const auto c = load_train_config(std::string(SEA_CONFIG_DIR) + "/synthetic.json");
  CHECK(c.top_n == 10);
  CHECK(c.window_k == 2);
  CHECK(c.log_tau_init == 0.0);
  CHECK(c.adapter == AdapterArch::mlp2);
  CHECK(c.lambda == 1.0);
  CHECK(c.total_steps <= 2000);
}

TEST_CASE("seed precedence is flag, config, environment, fallback") {
  const std::uint64_t flag = 5, config = 6;
  ::unsetenv("SEA_SEED");
  CHECK(resolve_seed(nullptr, nullptr, 3) == 3);
  ::setenv("SEA_SEED", "7", 1);
  CHECK(resolve_seed(nullptr, nullptr, 3) == 7);
  CHECK(resolve_seed(nullptr, &config, 3) == 6);
  CHECK(resolve_seed(&flag, &config, 3) == 5);
  ::setenv("SEA_SEED", "seven", 1);
  CHECK_THROWS_AS(resolve_seed(nullptr, nullptr, 3), Error);
  ::unsetenv("SEA_SEED");
}
