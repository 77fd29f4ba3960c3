#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lird/data.hpp"
#include "lird/embed.hpp"
#include "lird/net.hpp"
#include "lird/rng.hpp"
#include "lird/sim.hpp"

namespace lird::agent {

using embed::EmbeddingTable;
using sim::ActionVec;
using sim::StateVec;

struct Dims {
  std::size_t n = 10;  // state length
  std::size_t k = 4;   // list length
  std::size_t d = 50;  // embedding dimension

  std::size_t state_dim() const { return n * d; }
  std::size_t action_dim() const { return k * d; }
};

/// Items still eligible for recommendation in the current session.
class ItemSpace {
 public:
  explicit ItemSpace(std::size_t catalog_size);
  std::size_t catalog_size() const { return available_.size(); }
  std::size_t remaining() const { return remaining_; }
  bool contains(ItemId item) const { return item < available_.size() && available_[item]; }
  void remove(ItemId item);
  void reset();

 private:
  std::vector<char> available_;
  std::size_t remaining_;
};

/// Maps a state to K scoring weight vectors (output K*d, reshaped row-wise).
struct Actor {
  net::NetParams params;
  net::NetParams target_params;
  Dims dims;

  static Actor create(const Dims& dims, const std::vector<std::size_t>& hidden, Rng& rng);
};

/// Q(s, a) on the concatenated [state ; action] embedding vector.
struct Critic {
  net::NetParams params;
  net::NetParams target_params;
  Dims dims;

  static Critic create(const Dims& dims, const std::vector<std::size_t>& hidden, Rng& rng);
};

/// K x d matrix whose row k is the weight vector for slot k.
Eigen::MatrixXd generate_weights(const net::NetParams& actor, const StateVec& state,
                                 const Dims& dims);

/// score_i = w . e_i for every candidate. Throws on an empty candidate set.
std::vector<double> score_items(const Eigen::VectorXd& w, const EmbeddingTable& table,
                                std::span<const ItemId> candidates);

/// Greedy list construction from explicit weights: slot k takes the highest
/// scoring remaining item under row k; ties go to the lowest item id.
/// `space` may be null, meaning the whole catalog.
std::vector<ItemId> select_items(const Eigen::MatrixXd& weights, const EmbeddingTable& table,
                                 const ItemSpace* space);

/// Actor forward, optional Gaussian noise on the weights, then select_items.
ActionVec recommend_list(const net::NetParams& actor, const StateVec& state,
                         const EmbeddingTable& table, const ItemSpace* space, const Dims& dims,
                         double noise_std = 0.0, Rng* rng = nullptr);

double q_value(const net::NetParams& critic, const StateVec& state, const ActionVec& action);

/// Replay entries keep item ids only; vectors are rebuilt from the frozen table.
struct Transition {
  std::vector<ItemId> state;
  std::vector<ItemId> action;
  double reward = 0.0;
  std::vector<ItemId> next_state;
};

/// y = r + gamma * Q'(s', a') with a' chosen by the target actor over the
/// whole catalog.
double td_target(const Critic& critic, const Actor& actor, const Transition& transition,
                 double gamma, const EmbeddingTable& table);

/// Bounded FIFO ring with proportional prioritised sampling:
/// P(i) proportional to priority_i^exponent.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, double priority_exponent = 0.6, double epsilon = 1e-3);

  void push(Transition t);
  void push(Transition t, double priority);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return size_ == 0; }

  /// Slot index sample, with replacement.
  std::vector<std::size_t> sample_indices(std::size_t batch_size, Rng& rng) const;
  const Transition& at(std::size_t slot) const { return slots_.at(slot); }
  double priority(std::size_t slot) const { return priorities_.at(slot); }
  /// Sets the slot's priority to |td_error| + epsilon.
  void update_priority(std::size_t slot, double td_error);
  /// Slots from oldest to newest.
  std::vector<std::size_t> order() const;
  void clear();

 private:
  void set_leaf(std::size_t slot, double value);

  std::size_t capacity_;
  double exponent_;
  double epsilon_;
  std::vector<Transition> slots_;
  std::vector<double> priorities_;
  std::vector<double> tree_;  // sum tree over priority^exponent
  std::size_t leaves_ = 1;
  std::size_t next_ = 0;
  std::size_t size_ = 0;
  double max_priority_ = 1.0;
};

struct Minibatch {
  std::vector<std::size_t> slots;
  Eigen::MatrixXd states;       // N*d x B
  Eigen::MatrixXd actions;      // K*d x B
  Eigen::VectorXd rewards;      // B
  Eigen::MatrixXd next_states;  // N*d x B
};

Minibatch replay_sample(const ReplayBuffer& buffer, std::size_t batch_size, Rng& rng,
                        const EmbeddingTable& table);

/// Batched TD targets for a minibatch.
Eigen::VectorXd td_targets(const Critic& critic, const Actor& actor, const Minibatch& batch,
                           double gamma, const EmbeddingTable& table);

/// Mean squared TD loss (1/B) sum (y - Q)^2 and its parameter gradient.
struct CriticLoss {
  double loss = 0.0;
  Eigen::VectorXd td_errors;  // y - Q per sample
  net::Grads grads;
};
CriticLoss critic_loss(const net::NetParams& critic, const Eigen::MatrixXd& states,
                       const Eigen::MatrixXd& actions, const Eigen::VectorXd& targets);

/// Block-wise unit normalisation of K weight vectors stacked in a K*d column;
/// this is the continuous action the critic sees during the actor update.
Eigen::MatrixXd normalize_blocks(const Eigen::MatrixXd& weights, std::size_t d);

/// Differentiable stand-in for greedy item selection: per block,
/// m = sum_i softmax(beta * e_i . w/|w|) e_i, returned as m/|m|. As beta grows
/// this tends to the embedding of the argmax item.
Eigen::MatrixXd soft_item_projection(const Eigen::MatrixXd& weights, const EmbeddingTable& table,
                                     double beta);

/// Continuous action fed to the critic during the actor update: the soft item
/// projection when `table` is given and beta > 0, normalize_blocks otherwise.
struct ActionProxy {
  const EmbeddingTable* table = nullptr;
  double beta = 0.0;
};

/// Mean Q(s, proxy(f(s))) over the batch and its gradient w.r.t. the actor
/// parameters (ascent direction).
struct ActorObjective {
  double mean_q = 0.0;
  net::Grads grads;
};
ActorObjective actor_objective(const net::NetParams& actor, const net::NetParams& critic,
                               const Eigen::MatrixXd& states, const Dims& dims,
                               const ActionProxy& proxy = {});

enum class OptimizerKind { kSgd, kAdam };

struct LearnerConfig {
  std::vector<std::size_t> actor_hidden{128, 64};
  std::vector<std::size_t> critic_hidden{128, 64};
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double gamma = 0.75;
  double tau = 0.001;
  std::size_t batch_size = 64;
  // Inverse temperature of the soft item projection in the actor update;
  // 0 feeds the block-normalised weights to the critic instead.
  double projection_beta = 1.0;
};

/// Gradient-step wrapper applying either SGD or Adam.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, const net::NetParams& params);
  void step(net::NetParams& params, const net::Grads& grads, double lr);

 private:
  OptimizerKind kind_;
  std::optional<net::Adam> adam_;
};

struct UpdateStats {
  double critic_loss = 0.0;
  double mean_q = 0.0;
};

/// Actor, critic, their targets and optimiser state; one DDPG update per call.
class DdpgLearner {
 public:
  DdpgLearner(const Dims& dims, const LearnerConfig& config, Rng& init_rng);
  DdpgLearner(Actor actor, Critic critic, const LearnerConfig& config);

  ActionVec act(const StateVec& state, const EmbeddingTable& table, const ItemSpace* space,
                double noise_std, Rng* rng) const;

  /// critic_update then actor_update then soft target updates.
  UpdateStats update(ReplayBuffer& buffer, Rng& rng, const EmbeddingTable& table);

  /// One SGD/Adam step on the critic; returns per-sample TD errors.
  Eigen::VectorXd critic_update(const Minibatch& batch, const Eigen::VectorXd& targets,
                                double* loss_out = nullptr);
  /// Deterministic policy gradient step; returns mean Q before the step.
  double actor_update(const Minibatch& batch, const EmbeddingTable& table);
  void soft_update_targets();

  const Actor& actor() const { return actor_; }
  const Critic& critic() const { return critic_; }
  const LearnerConfig& config() const { return config_; }
  std::uint64_t checksum() const;

 private:
  Actor actor_;
  Critic critic_;
  LearnerConfig config_;
  Optimizer actor_opt_;
  Optimizer critic_opt_;
};

struct TrainConfig {
  LearnerConfig learner;
  std::size_t episodes = 400;
  std::size_t steps = 20;
  std::size_t replay_capacity = 100000;
  double priority_exponent = 0.6;
  double priority_epsilon = 1e-3;
  double noise_start = 0.2;
  double noise_end = 0.01;
  bool exclude_recommended = true;
  std::uint64_t seed = 1;
};

struct EpisodeLog {
  std::size_t episode = 0;
  double cumulative_reward = 0.0;
  double critic_loss = 0.0;
  double mean_q = 0.0;
};

struct TrainResult {
  DdpgLearner learner;
  std::vector<EpisodeLog> log;
};

/// Initial state of a session: its prior positives, left-padded to N.
StateVec initial_state(const data::Session& session, const Dims& dims,
                       const EmbeddingTable& table);

/// Sessions usable as episode seeds (at least one prior positive).
std::vector<const data::Session*> seedable_sessions(const std::vector<data::Session>& sessions);

/// Transition generation against the simulator followed by parameter updates,
/// M episodes of T steps. Deterministic given config.seed.
TrainResult train(const std::vector<data::Session>& sessions, sim::Simulator& simulator,
                  const Dims& dims, const TrainConfig& config);

void write_training_log(const std::filesystem::path& path, const std::vector<EpisodeLog>& log);

}  // namespace lird::agent
