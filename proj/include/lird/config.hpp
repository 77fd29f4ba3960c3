#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lird/agent.hpp"
#include "lird/data.hpp"
#include "lird/embed.hpp"
#include "lird/sim.hpp"

namespace lird {

/// Test-protocol settings shared by every evaluated policy.
struct ProtocolConfig {
  std::size_t short_items = 40;  // recommended items per short session
  std::size_t long_items = 80;   // recommended items per long session
  bool online_updates = true;    // learning policies keep updating within a session
  std::size_t max_sessions = 0;  // 0 = every test session
  bool exclude_recommended = true;
};

/// Item-wise DQN baseline: Q(s, e_i) with the critic's architecture.
struct DqnConfig {
  std::vector<std::size_t> hidden{128, 64};
  double lr = 1e-3;
  std::size_t episodes = 300;
  std::size_t candidates = 20;  // sampled items for the max in the Bellman target
  double epsilon_start = 0.3;
  double epsilon_end = 0.02;
};

/// Fully resolved configuration of one pipeline run.
struct Config {
  std::uint64_t seed = 7;

  data::SyntheticConfig generator;
  double train_fraction = 0.7;
  data::RewardMap rewards;

  embed::SkipGramConfig embed;
  bool center_embeddings = true;

  sim::SimConfig sim;
  agent::Dims dims;
  agent::TrainConfig train;

  ProtocolConfig protocol;
  DqnConfig dqn;
  std::vector<std::string> policies{"lird", "random", "popularity"};

  /// Propagates shared values (seed fan-out, d, K) into the stage configs and
  /// checks every range. Throws std::invalid_argument.
  void resolve();
};

/// Pretty-printed JSON of every configurable field. Stage seeds are derived
/// from `seed` by resolve() and are not listed.
std::string config_to_json(const Config& config);

/// Overlays the fields present in a JSON document onto `config`. Unknown keys
/// and ill-typed values throw std::invalid_argument.
void merge_config_json(Config& config, const std::string& text);

/// Defaults overlaid with the file at `path`.
Config load_config(const std::filesystem::path& path);

}  // namespace lird
