#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lird/agent.hpp"
#include "lird/config.hpp"
#include "lird/data.hpp"
#include "lird/sim.hpp"

namespace lird::eval {

using agent::ItemSpace;
using sim::ActionVec;
using sim::StateVec;

// ---------------------------------------------------------------------------
// Metrics over one recommended list; rewards[k] is the feedback at position k+1.

/// Graded gain = reward value, discount 1/log2(k+1), normalised by the ideal
/// ordering. All-zero lists score 0.
double ndcg(std::span<const double> rewards);

/// Binary relevance (reward > 0); mean of precision@k over relevant positions.
double average_precision(std::span<const double> rewards);

// ---------------------------------------------------------------------------
// Policies

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;

  /// Restore the trained snapshot before a session.
  virtual void reset() {}
  /// Checksum of the trained snapshot, for learning policies.
  virtual std::optional<std::uint64_t> snapshot_checksum() const { return std::nullopt; }
  /// Checksum of the live parameters, for learning policies.
  virtual std::optional<std::uint64_t> checksum() const { return std::nullopt; }

  virtual ActionVec act(const StateVec& state, const ItemSpace& space, Rng& rng) = 0;
  virtual void observe(const StateVec& /*state*/, const ActionVec& /*action*/,
                       const sim::StepResult& /*outcome*/, Rng& /*rng*/) {}
};

/// Uniform K distinct items from the available space.
ActionVec baseline_random(const StateVec& state, const ItemSpace& space, std::size_t k,
                          const embed::EmbeddingTable& table, Rng& rng);

class RandomPolicy final : public Policy {
 public:
  RandomPolicy(std::size_t k, const embed::EmbeddingTable& table) : k_(k), table_(&table) {}
  std::string name() const override { return "random"; }
  ActionVec act(const StateVec& state, const ItemSpace& space, Rng& rng) override;

 private:
  std::size_t k_;
  const embed::EmbeddingTable* table_;
};

/// Recommends the K items with the most logged positive feedback that are
/// neither in the current state nor already recommended. Ties: lowest id.
class PopularityPolicy final : public Policy {
 public:
  PopularityPolicy(std::vector<ItemId> ranking, std::size_t k, const embed::EmbeddingTable& table)
      : ranking_(std::move(ranking)), k_(k), table_(&table) {}
  std::string name() const override { return "popularity"; }
  ActionVec act(const StateVec& state, const ItemSpace& space, Rng& rng) override;
  const std::vector<ItemId>& ranking() const { return ranking_; }

 private:
  std::vector<ItemId> ranking_;
  std::size_t k_;
  const embed::EmbeddingTable* table_;
};

/// Global ranking by positive-feedback count over the training sessions.
std::vector<ItemId> popularity_ranking(const std::vector<data::Session>& train,
                                       std::size_t catalog_size);
PopularityPolicy baseline_popularity(const std::vector<data::Session>& train, std::size_t k,
                                     const embed::EmbeddingTable& table);

/// Trained LIRD snapshot; continues DDPG updates inside a session and is reset
/// to the snapshot before the next one.
class LirdPolicy final : public Policy {
 public:
  LirdPolicy(agent::DdpgLearner snapshot, const embed::EmbeddingTable& table,
             const agent::TrainConfig& replay, bool online_updates, std::string name = "lird");
  std::string name() const override { return name_; }
  void reset() override;
  std::optional<std::uint64_t> snapshot_checksum() const override { return snapshot_checksum_; }
  std::optional<std::uint64_t> checksum() const override { return live_.checksum(); }
  ActionVec act(const StateVec& state, const ItemSpace& space, Rng& rng) override;
  void observe(const StateVec& state, const ActionVec& action, const sim::StepResult& outcome,
               Rng& rng) override;

 private:
  agent::DdpgLearner snapshot_;
  agent::DdpgLearner live_;
  std::uint64_t snapshot_checksum_;
  const embed::EmbeddingTable* table_;
  agent::ReplayBuffer buffer_;
  bool online_updates_;
  std::string name_;
};

/// Item-wise DQN: Q(s, e_i) for every item, list = top-K items by Q.
struct ItemwiseDqn {
  net::NetParams params;
  net::NetParams target_params;
  agent::Dims dims;

  static ItemwiseDqn create(const agent::Dims& dims, const std::vector<std::size_t>& hidden,
                            Rng& rng);
};

/// Top-K available items by Q(s, e_i), one critic forward per item. Ties: lowest id.
ActionVec itemwise_select(const net::NetParams& q, const StateVec& state,
                          const embed::EmbeddingTable& table, const ItemSpace* space,
                          std::size_t k);

/// y = r + gamma * max_{j in candidates} Q'(s', e_j).
Eigen::VectorXd itemwise_targets(const net::NetParams& target, const agent::Minibatch& batch,
                                 double gamma, std::span<const ItemId> candidates,
                                 const embed::EmbeddingTable& table);

class ItemwiseDqnLearner {
 public:
  ItemwiseDqnLearner(ItemwiseDqn net, const DqnConfig& config, double gamma, double tau,
                     std::size_t batch_size);
  ActionVec act(const StateVec& state, const embed::EmbeddingTable& table, const ItemSpace* space,
                double epsilon, Rng& rng) const;
  /// Stores one item-level transition per list slot.
  void store(agent::ReplayBuffer& buffer, const StateVec& state, const ActionVec& action,
             const sim::StepResult& outcome) const;
  double update(agent::ReplayBuffer& buffer, Rng& rng, const embed::EmbeddingTable& table);
  const ItemwiseDqn& net() const { return net_; }
  std::uint64_t checksum() const;

 private:
  ItemwiseDqn net_;
  DqnConfig config_;
  double gamma_;
  double tau_;
  std::size_t batch_size_;
  agent::Optimizer opt_;
};

ItemwiseDqnLearner baseline_itemwise_dqn(const std::vector<data::Session>& train,
                                         sim::Simulator& simulator, const Config& config);

class ItemwiseDqnPolicy final : public Policy {
 public:
  ItemwiseDqnPolicy(ItemwiseDqnLearner snapshot, const embed::EmbeddingTable& table,
                    const agent::TrainConfig& replay, bool online_updates);
  std::string name() const override { return "dqn"; }
  void reset() override;
  std::optional<std::uint64_t> snapshot_checksum() const override { return snapshot_checksum_; }
  std::optional<std::uint64_t> checksum() const override { return live_.checksum(); }
  ActionVec act(const StateVec& state, const ItemSpace& space, Rng& rng) override;
  void observe(const StateVec& state, const ActionVec& action, const sim::StepResult& outcome,
               Rng& rng) override;

 private:
  ItemwiseDqnLearner snapshot_;
  ItemwiseDqnLearner live_;
  std::uint64_t snapshot_checksum_;
  const embed::EmbeddingTable* table_;
  agent::ReplayBuffer buffer_;
  bool online_updates_;
};

// ---------------------------------------------------------------------------
// Test protocol

enum class LengthClass { kShort, kLong };
std::string to_string(LengthClass c);
LengthClass parse_length_class(const std::string& s);

/// Number of lists of length k that covers the class's item budget.
std::size_t step_budget(LengthClass c, std::size_t k, const ProtocolConfig& config);

struct SessionTrace {
  std::int64_t session_id = 0;
  std::optional<std::uint64_t> start_checksum;
  std::optional<std::uint64_t> end_checksum;
  double cumulative_reward = 0.0;
  double map = 0.0;
  double ndcg = 0.0;
};

struct EvalReport {
  std::string policy;
  LengthClass length_class = LengthClass::kLong;
  double map = 0.0;
  double ndcg = 0.0;
  double mean_cumulative_reward = 0.0;
  std::size_t sessions = 0;
  double seconds_per_action = 0.0;
  std::vector<SessionTrace> traces;
};

/// Rolls `policy` against the simulator over every seedable test session.
/// Before each session the policy is reset and its parameter checksum must
/// equal the snapshot checksum (std::runtime_error otherwise). Metrics are
/// averaged per session, then across sessions. Simulator randomness per
/// session is derived from (seed, session_id).
EvalReport run_test_protocol(Policy& policy, const std::vector<data::Session>& test,
                             const sim::Simulator& simulator, LengthClass length_class,
                             const agent::Dims& dims, const ProtocolConfig& config,
                             std::uint64_t seed);

// ---------------------------------------------------------------------------
// Pipeline helpers and sweeps

/// Raw skip-gram table to the table used by the simulator and agents:
/// optionally mean-centred, then unit-normalised.
embed::EmbeddingTable rl_table(const embed::EmbeddingTable& raw, bool center);

struct Prepared {
  std::vector<data::Session> sessions;
  std::vector<data::Session> train;
  std::vector<data::Session> test;
  embed::EmbeddingTable table;
  std::vector<sim::MemoryTriple> memory;
};

/// gen -> split -> embed -> simulator memory, all from config.
Prepared prepare(const Config& config);

/// Builds and evaluates each named policy ("lird", "random", "popularity",
/// "dqn") on both or one length class.
std::vector<EvalReport> evaluate_policies(const Config& config, const Prepared& prepared,
                                          const std::vector<LengthClass>& classes,
                                          const agent::DdpgLearner* trained = nullptr);

enum class SweepParam { kK, kAlpha };
std::string to_string(SweepParam p);
SweepParam parse_sweep_param(const std::string& s);

struct SweepRow {
  SweepParam param = SweepParam::kK;
  double value = 0.0;
  std::string label;
  EvalReport report;
};

/// One full train + long-session test cycle of LIRD per value, all from the
/// same base seed.
std::vector<SweepRow> sweep(SweepParam param, const std::vector<double>& values,
                            const Config& config);

// Report files
void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports);
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);
std::string format_report_table(const std::vector<EvalReport>& reports);

}  // namespace lird::eval
