#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lird/data.hpp"
#include "lird/embed.hpp"
#include "lird/rng.hpp"

namespace lird::sim {

using embed::EmbeddingTable;

/// N chronological positive items and the concatenation of their embeddings.
/// kNullItem slots contribute zero blocks.
struct StateVec {
  std::vector<ItemId> items;
  Eigen::VectorXd vec;
};

/// K distinct recommended items and the concatenation of their embeddings.
struct ActionVec {
  std::vector<ItemId> items;
  Eigen::VectorXd vec;
};

using RewardPattern = std::vector<double>;

struct MemoryTriple {
  StateVec state;
  ActionVec action;
  RewardPattern rewards;
};

/// Aggregate of all memory triples sharing one reward pattern.
struct RewardGroup {
  RewardPattern pattern;
  std::size_t count = 0;
  Eigen::VectorXd mean_state;   // (1/count) * sum s_i/|s_i|
  Eigen::VectorXd mean_action;  // (1/count) * sum a_i/|a_i|
};

struct SimConfig {
  double alpha = 0.2;       // state vs action similarity blend
  double gamma_pos = 0.9;   // positional discount of the overall reward
  std::size_t refresh_every = 1000;
  bool append_simulated = false;

  void validate() const;
};

/// Keeps the last N items of `items`, left-padding with kNullItem.
std::vector<ItemId> pad_state(std::span<const ItemId> items, std::size_t n);

Eigen::VectorXd concat_embeddings(std::span<const ItemId> items, const EmbeddingTable& table);
StateVec make_state(std::vector<ItemId> items, const EmbeddingTable& table);
/// Throws std::invalid_argument on repeated or null items.
ActionVec make_action(std::vector<ItemId> items, const EmbeddingTable& table);

/// State update of the positive-append rule: every action item whose reward
/// is positive is appended in list order and the oldest item dropped.
std::vector<ItemId> advance_state(std::span<const ItemId> state, std::span<const ItemId> action,
                                  std::span<const double> rewards);

/// Replays each session in windows of K events. Trailing windows shorter than
/// K are dropped; windows whose state is all padding are skipped because
/// their cosine is undefined.
std::vector<MemoryTriple> build_memory(const std::vector<data::Session>& sessions, std::size_t n,
                                       std::size_t k, const EmbeddingTable& table,
                                       const data::RewardMap& rewards);

/// alpha * cos(s, s_i) + (1 - alpha) * cos(a, a_i).
double pair_similarity(const StateVec& state, const ActionVec& action, const MemoryTriple& m,
                       double alpha);

/// One group per distinct reward pattern, ordered lexicographically by pattern.
std::vector<RewardGroup> build_groups(const std::vector<MemoryTriple>& memory);

struct PatternProbability {
  RewardPattern pattern;
  double probability = 0.0;
};

/// Grouped closed form: score_x = N_x (alpha s.sbar_x/|s| + (1-alpha) a.abar_x/|a|),
/// clamped at 0 and normalised. Falls back to uniform if every score clamps.
std::vector<PatternProbability> group_probabilities(const StateVec& state,
                                                    const ActionVec& action,
                                                    const std::vector<RewardGroup>& groups,
                                                    double alpha);

/// Categorical draw; returns the index into `probabilities`.
std::size_t sample_pattern(const std::vector<PatternProbability>& probabilities, Rng& rng);

/// sum_k gamma_pos^(k-1) * pattern[k].
double overall_reward(std::span<const double> pattern, double gamma_pos);

struct StepResult {
  RewardPattern rewards;
  double reward = 0.0;
  StateVec next_state;
};

StepResult step(const StateVec& state, const ActionVec& action,
                const std::vector<RewardGroup>& groups, const SimConfig& config,
                const EmbeddingTable& table, Rng& rng);

/// Mean overall reward of (state, action) under the pattern distribution.
double expected_reward(const StateVec& state, const ActionVec& action,
                       const std::vector<RewardGroup>& groups, const SimConfig& config);

/// Simulator environment bound to its memory, groups and embedding table.
///
/// Group statistics are refreshed every `refresh_every` finished episodes.
/// Simulated transitions are only appended to memory when
/// `append_simulated` is set, so by default refresh leaves groups unchanged.
class Simulator {
 public:
  Simulator(std::vector<MemoryTriple> memory, SimConfig config, const EmbeddingTable& table);

  StepResult step(const StateVec& state, const ActionVec& action, Rng& rng);
  double expected_reward(const StateVec& state, const ActionVec& action) const;
  void end_episode();

  const std::vector<RewardGroup>& groups() const { return groups_; }
  const std::vector<MemoryTriple>& memory() const { return memory_; }
  const SimConfig& config() const { return config_; }
  const EmbeddingTable& table() const { return *table_; }
  std::size_t refreshes() const { return refreshes_; }

 private:
  std::vector<MemoryTriple> memory_;
  std::vector<RewardGroup> groups_;
  SimConfig config_;
  const EmbeddingTable* table_;
  std::size_t episodes_ = 0;
  std::size_t refreshes_ = 0;
};

// Memory snapshot: text dump of triples tagged with the embedding checksum.
void save_memory(const std::filesystem::path& path, const std::vector<MemoryTriple>& memory,
                 const EmbeddingTable& table);
/// Throws std::runtime_error if the snapshot was built against another table.
std::vector<MemoryTriple> load_memory(const std::filesystem::path& path,
                                      const EmbeddingTable& table);

}  // namespace lird::sim
