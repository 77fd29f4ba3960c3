#include "lird/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lird::eval {

double ndcg(std::span<const double> rewards) {
  if (rewards.empty()) throw std::invalid_argument("ndcg: empty feedback sequence");
  auto dcg = [](std::span<const double> r) {
    double s = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) s += r[k] / std::log2(static_cast<double>(k) + 2.0);
    return s;
  };
  std::vector<double> ideal(rewards.begin(), rewards.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double idcg = dcg(ideal);
  if (idcg <= 0.0) return 0.0;
  return dcg(rewards) / idcg;
}

double average_precision(std::span<const double> rewards) {
  if (rewards.empty()) throw std::invalid_argument("average_precision: empty feedback sequence");
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < rewards.size(); ++k) {
    if (rewards[k] > 0.0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return hits ? sum / static_cast<double>(hits) : 0.0;
}

// ---------------------------------------------------------------------------
// Baselines

ActionVec baseline_random(const StateVec& /*state*/, const ItemSpace& space, std::size_t k,
                          const embed::EmbeddingTable& table, Rng& rng) {
  if (space.remaining() < k) throw std::invalid_argument("baseline_random: catalog smaller than K");
  std::vector<ItemId> pool;
  pool.reserve(space.remaining());
  for (std::size_t i = 0; i < space.catalog_size(); ++i) {
    if (space.contains(static_cast<ItemId>(i))) pool.push_back(static_cast<ItemId>(i));
  }
  // Partial Fisher-Yates: the first k entries are a uniform k-permutation.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  return sim::make_action(std::move(pool), table);
}

ActionVec RandomPolicy::act(const StateVec& state, const ItemSpace& space, Rng& rng) {
  return baseline_random(state, space, k_, *table_, rng);
}

std::vector<ItemId> popularity_ranking(const std::vector<data::Session>& train,
                                       std::size_t catalog_size) {
  std::vector<std::size_t> counts(catalog_size, 0);
  auto bump = [&](ItemId i) {
    if (i >= catalog_size) throw std::out_of_range("popularity: item outside catalog");
    ++counts[i];
  };
  for (const auto& s : train) {
    for (auto i : s.prior_positives) bump(i);
    for (const auto& e : s.events) {
      if (e.feedback != data::FeedbackKind::kSkip) bump(e.item);
    }
  }
  std::vector<ItemId> ranking(catalog_size);
  std::iota(ranking.begin(), ranking.end(), ItemId{0});
  std::stable_sort(ranking.begin(), ranking.end(),
                   [&](ItemId a, ItemId b) { return counts[a] > counts[b]; });
  return ranking;
}

PopularityPolicy baseline_popularity(const std::vector<data::Session>& train, std::size_t k,
                                     const embed::EmbeddingTable& table) {
  return PopularityPolicy(popularity_ranking(train, table.size()), k, table);
}

ActionVec PopularityPolicy::act(const StateVec& state, const ItemSpace& space, Rng& /*rng*/) {
  std::vector<ItemId> out;
  out.reserve(k_);
  for (auto item : ranking_) {
    if (out.size() == k_) break;
    if (!space.contains(item)) continue;
    if (std::find(state.items.begin(), state.items.end(), item) != state.items.end()) continue;
    out.push_back(item);
  }
  if (out.size() < k_) throw std::invalid_argument("popularity: fewer than K eligible items");
  return sim::make_action(std::move(out), *table_);
}

// ---------------------------------------------------------------------------
// LIRD under the test protocol

LirdPolicy::LirdPolicy(agent::DdpgLearner snapshot, const embed::EmbeddingTable& table,
                       const agent::TrainConfig& replay, bool online_updates, std::string name)
    : snapshot_(std::move(snapshot)), live_(snapshot_), snapshot_checksum_(snapshot_.checksum()),
      table_(&table), buffer_(replay.replay_capacity, replay.priority_exponent,
                              replay.priority_epsilon),
      online_updates_(online_updates), name_(std::move(name)) {}

void LirdPolicy::reset() {
  live_ = snapshot_;
  buffer_.clear();
}

ActionVec LirdPolicy::act(const StateVec& state, const ItemSpace& space, Rng& /*rng*/) {
  return live_.act(state, *table_, &space, 0.0, nullptr);
}

void LirdPolicy::observe(const StateVec& state, const ActionVec& action,
                         const sim::StepResult& outcome, Rng& rng) {
  if (!online_updates_) return;
  buffer_.push({state.items, action.items, outcome.reward, outcome.next_state.items});
  live_.update(buffer_, rng, *table_);
}

// ---------------------------------------------------------------------------
// Item-wise DQN

ItemwiseDqn ItemwiseDqn::create(const agent::Dims& dims, const std::vector<std::size_t>& hidden,
                                Rng& rng) {
  const agent::Dims single{dims.n, 1, dims.d};
  auto critic = agent::Critic::create(single, hidden, rng);
  return ItemwiseDqn{std::move(critic.params), std::move(critic.target_params), dims};
}

namespace {

// Columns of [state ; e_i] for a contiguous run of candidate items, chunked so
// the input block stays a few MB at large catalogs.
constexpr std::size_t kChunk = 1024;

Eigen::RowVectorXd q_over_items(const net::NetParams& q, const Eigen::VectorXd& state,
                                const embed::EmbeddingTable& table,
                                const std::vector<ItemId>& items) {
  const auto sd = state.size();
  const auto d = static_cast<Eigen::Index>(table.dim());
  Eigen::RowVectorXd out(static_cast<Eigen::Index>(items.size()));
  Eigen::MatrixXd x;
  for (std::size_t lo = 0; lo < items.size(); lo += kChunk) {
    const std::size_t n = std::min(kChunk, items.size() - lo);
    x.resize(sd + d, static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      x.col(c).head(sd) = state;
      x.col(c).tail(d) = table.matrix().row(items[lo + j]).transpose();
    }
    out.segment(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(n)) =
        net::forward_batch(q, x).output().row(0);
  }
  return out;
}

}  // namespace

ActionVec itemwise_select(const net::NetParams& q, const StateVec& state,
                          const embed::EmbeddingTable& table, const ItemSpace* space,
                          std::size_t k) {
  std::vector<ItemId> items;
  items.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!space || space->contains(static_cast<ItemId>(i))) items.push_back(static_cast<ItemId>(i));
  }
  if (items.size() < k) throw std::invalid_argument("itemwise_select: item space smaller than K");
  const Eigen::RowVectorXd qs = q_over_items(q, state.vec, table, items);
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double qa = qs(static_cast<Eigen::Index>(a));
                      const double qb = qs(static_cast<Eigen::Index>(b));
                      return qa > qb || (qa == qb && items[a] < items[b]);
                    });
  std::vector<ItemId> out;
  out.reserve(k);
  for (std::size_t j = 0; j < k; ++j) out.push_back(items[order[j]]);
  return sim::make_action(std::move(out), table);
}

Eigen::VectorXd itemwise_targets(const net::NetParams& target, const agent::Minibatch& batch,
                                 double gamma, std::span<const ItemId> candidates,
                                 const embed::EmbeddingTable& table) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("itemwise_targets: gamma outside [0,1]");
  }
  const auto b = batch.next_states.cols();
  if (gamma == 0.0) return batch.rewards;
  if (candidates.empty()) throw std::invalid_argument("itemwise_targets: no candidates");
  const auto c = static_cast<Eigen::Index>(candidates.size());
  const auto sd = batch.next_states.rows();
  const auto d = static_cast<Eigen::Index>(table.dim());
  Eigen::MatrixXd x(sd + d, b * c);
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      x.col(i * c + j).head(sd) = batch.next_states.col(i);
      x.col(i * c + j).tail(d) =
          table.matrix().row(candidates[static_cast<std::size_t>(j)]).transpose();
    }
  }
  const Eigen::RowVectorXd q = net::forward_batch(target, x).output().row(0);
  Eigen::VectorXd y(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    y(i) = batch.rewards(i) + gamma * q.segment(i * c, c).maxCoeff();
  }
  return y;
}

ItemwiseDqnLearner::ItemwiseDqnLearner(ItemwiseDqn net, const DqnConfig& config, double gamma,
                                       double tau, std::size_t batch_size)
    : net_(std::move(net)), config_(config), gamma_(gamma), tau_(tau), batch_size_(batch_size),
      opt_(agent::OptimizerKind::kAdam, net_.params) {}

ActionVec ItemwiseDqnLearner::act(const StateVec& state, const embed::EmbeddingTable& table,
                                  const ItemSpace* space, double epsilon, Rng& rng) const {
  if (epsilon > 0.0) {
    std::bernoulli_distribution explore(epsilon);
    if (explore(rng)) {
      const ItemSpace full(table.size());
      return baseline_random(state, space ? *space : full, net_.dims.k, table, rng);
    }
  }
  return itemwise_select(net_.params, state, table, space, net_.dims.k);
}

void ItemwiseDqnLearner::store(agent::ReplayBuffer& buffer, const StateVec& state,
                               const ActionVec& action, const sim::StepResult& outcome) const {
  for (std::size_t k = 0; k < action.items.size(); ++k) {
    buffer.push({state.items, {action.items[k]}, outcome.rewards.at(k), outcome.next_state.items});
  }
}

double ItemwiseDqnLearner::update(agent::ReplayBuffer& buffer, Rng& rng,
                                  const embed::EmbeddingTable& table) {
  const auto batch = agent::replay_sample(buffer, batch_size_, rng, table);
  std::vector<ItemId> candidates;
  if (gamma_ > 0.0) {
    const std::size_t c = std::min(config_.candidates, table.size());
    const ItemSpace full(table.size());
    candidates = baseline_random(StateVec{}, full, c, table, rng).items;
  }
  const Eigen::VectorXd y = itemwise_targets(net_.target_params, batch, gamma_, candidates, table);
  auto loss = agent::critic_loss(net_.params, batch.states, batch.actions, y);
  if (!std::isfinite(loss.loss)) throw std::runtime_error("dqn update: non-finite loss");
  opt_.step(net_.params, loss.grads, config_.lr);
  for (std::size_t i = 0; i < batch.slots.size(); ++i) {
    buffer.update_priority(batch.slots[i], loss.td_errors(static_cast<Eigen::Index>(i)));
  }
  net::soft_update(net_.target_params, net_.params, tau_);
  return loss.loss;
}

std::uint64_t ItemwiseDqnLearner::checksum() const {
  return mix_seed(net::checksum(net_.params) ^ mix_seed(net::checksum(net_.target_params)));
}

ItemwiseDqnLearner baseline_itemwise_dqn(const std::vector<data::Session>& train,
                                         sim::Simulator& simulator, const Config& config) {
  const auto seeds = agent::seedable_sessions(train);
  if (seeds.empty()) throw std::invalid_argument("dqn: empty training set");
  const auto& table = simulator.table();
  const auto& dims = config.dims;
  Rng init_rng(derive_seed(config.seed, seed_stream::kBaseline, 0));
  Rng rng(derive_seed(config.seed, seed_stream::kBaseline, 1));
  ItemwiseDqnLearner learner(ItemwiseDqn::create(dims, config.dqn.hidden, init_rng), config.dqn,
                             config.train.learner.gamma, config.train.learner.tau,
                             config.train.learner.batch_size);
  agent::ReplayBuffer buffer(config.train.replay_capacity, config.train.priority_exponent,
                             config.train.priority_epsilon);
  std::uniform_int_distribution<std::size_t> pick(0, seeds.size() - 1);
  ItemSpace space(table.size());
  const bool exclude = config.train.exclude_recommended;
  const std::size_t episodes = config.dqn.episodes;
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    space.reset();
    StateVec state = agent::initial_state(*seeds[pick(rng)], dims, table);
    const double frac =
        episodes > 1 ? static_cast<double>(ep) / static_cast<double>(episodes - 1) : 0.0;
    const double eps =
        config.dqn.epsilon_start + (config.dqn.epsilon_end - config.dqn.epsilon_start) * frac;
    for (std::size_t t = 0; t < config.train.steps; ++t) {
      if (exclude && space.remaining() < dims.k) space.reset();
      ActionVec action = learner.act(state, table, exclude ? &space : nullptr, eps, rng);
      if (exclude) {
        for (auto i : action.items) space.remove(i);
      }
      auto outcome = simulator.step(state, action, rng);
      learner.store(buffer, state, action, outcome);
      state = std::move(outcome.next_state);
      learner.update(buffer, rng, table);
    }
    simulator.end_episode();
  }
  return learner;
}

ItemwiseDqnPolicy::ItemwiseDqnPolicy(ItemwiseDqnLearner snapshot,
                                     const embed::EmbeddingTable& table,
                                     const agent::TrainConfig& replay, bool online_updates)
    : snapshot_(std::move(snapshot)), live_(snapshot_), snapshot_checksum_(snapshot_.checksum()),
      table_(&table), buffer_(replay.replay_capacity, replay.priority_exponent,
                              replay.priority_epsilon),
      online_updates_(online_updates) {}

void ItemwiseDqnPolicy::reset() {
  live_ = snapshot_;
  buffer_.clear();
}

ActionVec ItemwiseDqnPolicy::act(const StateVec& state, const ItemSpace& space, Rng& rng) {
  return live_.act(state, *table_, &space, 0.0, rng);
}

void ItemwiseDqnPolicy::observe(const StateVec& state, const ActionVec& action,
                                const sim::StepResult& outcome, Rng& rng) {
  if (!online_updates_) return;
  live_.store(buffer_, state, action, outcome);
  live_.update(buffer_, rng, *table_);
}

// ---------------------------------------------------------------------------
// Test protocol

std::string to_string(LengthClass c) { return c == LengthClass::kShort ? "short" : "long"; }

LengthClass parse_length_class(const std::string& s) {
  if (s == "short") return LengthClass::kShort;
  if (s == "long") return LengthClass::kLong;
  throw std::invalid_argument("unknown length class '" + s + "' (expected short|long)");
}

std::size_t step_budget(LengthClass c, std::size_t k, const ProtocolConfig& config) {
  if (k == 0) throw std::invalid_argument("step_budget: K must be >= 1");
  const std::size_t items = c == LengthClass::kShort ? config.short_items : config.long_items;
  return (items + k - 1) / k;
}

EvalReport run_test_protocol(Policy& policy, const std::vector<data::Session>& test,
                             const sim::Simulator& simulator, LengthClass length_class,
                             const agent::Dims& dims, const ProtocolConfig& config,
                             std::uint64_t seed) {
  EvalReport report;
  report.policy = policy.name();
  report.length_class = length_class;

  auto sessions = agent::seedable_sessions(test);
  if (config.max_sessions > 0 && sessions.size() > config.max_sessions) {
    sessions.resize(config.max_sessions);
  }
  const auto& table = simulator.table();
  const std::size_t budget = step_budget(length_class, dims.k, config);
  ItemSpace space(table.size());
  double act_seconds = 0.0;
  std::size_t actions = 0;

  for (const data::Session* session : sessions) {
    policy.reset();
    SessionTrace trace;
    trace.session_id = session->session_id;
    trace.start_checksum = policy.checksum();
    if (trace.start_checksum != policy.snapshot_checksum()) {
      throw std::runtime_error("test protocol: parameters differ from the trained snapshot at the "
                               "start of session " + std::to_string(session->session_id));
    }
    Rng rng(derive_seed(seed, seed_stream::kEval, static_cast<std::uint64_t>(session->session_id)));
    space.reset();
    StateVec state = agent::initial_state(*session, dims, table);
    for (std::size_t t = 0; t < budget; ++t) {
      if (config.exclude_recommended && space.remaining() < dims.k) space.reset();
      const auto t0 = std::chrono::steady_clock::now();
      ActionVec action = policy.act(state, space, rng);
      act_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      ++actions;
      if (config.exclude_recommended) {
        for (auto i : action.items) space.remove(i);
      }
      auto outcome =
          sim::step(state, action, simulator.groups(), simulator.config(), table, rng);
      trace.cumulative_reward += outcome.reward;
      trace.map += average_precision(outcome.rewards);
      trace.ndcg += ndcg(outcome.rewards);
      policy.observe(state, action, outcome, rng);
      state = std::move(outcome.next_state);
    }
    if (budget > 0) {
      trace.map /= static_cast<double>(budget);
      trace.ndcg /= static_cast<double>(budget);
    }
    trace.end_checksum = policy.checksum();
    report.traces.push_back(trace);
  }

  report.sessions = report.traces.size();
  if (report.sessions > 0) {
    for (const auto& t : report.traces) {
      report.map += t.map;
      report.ndcg += t.ndcg;
      report.mean_cumulative_reward += t.cumulative_reward;
    }
    const auto n = static_cast<double>(report.sessions);
    report.map /= n;
    report.ndcg /= n;
    report.mean_cumulative_reward /= n;
  }
  if (actions > 0) report.seconds_per_action = act_seconds / static_cast<double>(actions);
  return report;
}

}  // namespace lird::eval
