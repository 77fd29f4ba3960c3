#include "lird/agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace lird::agent {

ItemSpace::ItemSpace(std::size_t catalog_size)
    : available_(catalog_size, 1), remaining_(catalog_size) {}

void ItemSpace::remove(ItemId item) {
  if (contains(item)) {
    available_[item] = 0;
    --remaining_;
  }
}

void ItemSpace::reset() {
  std::fill(available_.begin(), available_.end(), 1);
  remaining_ = available_.size();
}

Actor Actor::create(const Dims& dims, const std::vector<std::size_t>& hidden, Rng& rng) {
  std::vector<std::size_t> sizes{dims.state_dim()};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(dims.action_dim());
  Actor a;
  a.params = net::make_mlp(sizes, net::Activation::kTanh, net::Activation::kTanh, rng);
  a.target_params = a.params;
  a.dims = dims;
  return a;
}

Critic Critic::create(const Dims& dims, const std::vector<std::size_t>& hidden, Rng& rng) {
  std::vector<std::size_t> sizes{dims.state_dim() + dims.action_dim()};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  Critic c;
  c.params = net::make_mlp(sizes, net::Activation::kTanh, net::Activation::kIdentity, rng);
  c.target_params = c.params;
  c.dims = dims;
  return c;
}

Eigen::MatrixXd generate_weights(const net::NetParams& actor, const StateVec& state,
                                 const Dims& dims) {
  if (static_cast<std::size_t>(state.vec.size()) != dims.state_dim()) {
    throw std::invalid_argument("generate_weights: state dimension mismatch");
  }
  const Eigen::VectorXd out = net::forward(actor, state.vec);
  if (static_cast<std::size_t>(out.size()) != dims.action_dim()) {
    throw std::invalid_argument("generate_weights: actor output is not K*d");
  }
  Eigen::MatrixXd w(dims.k, dims.d);
  for (std::size_t k = 0; k < dims.k; ++k) {
    w.row(static_cast<Eigen::Index>(k)) =
        out.segment(static_cast<Eigen::Index>(k * dims.d), static_cast<Eigen::Index>(dims.d));
  }
  return w;
}

std::vector<double> score_items(const Eigen::VectorXd& w, const EmbeddingTable& table,
                                std::span<const ItemId> candidates) {
  if (candidates.empty()) throw std::invalid_argument("score_items: empty candidate set");
  if (static_cast<std::size_t>(w.size()) != table.dim()) {
    throw std::invalid_argument("score_items: weight dimension mismatch");
  }
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (auto item : candidates) {
    if (item >= table.size()) throw std::out_of_range("score_items: item outside catalog");
    scores.push_back(table.matrix().row(item).dot(w));
  }
  return scores;
}

namespace {

// Greedy pass over a precomputed n x K score block (column k = slot k).
template <typename Scores>
void greedy_from_scores(const Scores& scores, std::size_t k_slots, const ItemSpace* space,
                        std::vector<char>& taken, std::vector<ItemId>& out) {
  const auto n = static_cast<std::size_t>(scores.rows());
  for (std::size_t k = 0; k < k_slots; ++k) {
    std::size_t best = n;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i] || (space && !space->contains(static_cast<ItemId>(i)))) continue;
      const double s = scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      if (best == n || s > best_score) {
        best = i;
        best_score = s;
      }
    }
    if (best == n) throw std::invalid_argument("recommend_list: item space smaller than K");
    taken[best] = 1;
    out.push_back(static_cast<ItemId>(best));
  }
}

}  // namespace

std::vector<ItemId> select_items(const Eigen::MatrixXd& weights, const EmbeddingTable& table,
                                 const ItemSpace* space) {
  const auto k_slots = static_cast<std::size_t>(weights.rows());
  const std::size_t pool = space ? space->remaining() : table.size();
  if (pool < k_slots) throw std::invalid_argument("recommend_list: item space smaller than K");
  if (static_cast<std::size_t>(weights.cols()) != table.dim()) {
    throw std::invalid_argument("recommend_list: weight dimension mismatch");
  }
  const Eigen::MatrixXd scores = table.matrix() * weights.transpose();
  std::vector<char> taken(table.size(), 0);
  std::vector<ItemId> out;
  out.reserve(k_slots);
  greedy_from_scores(scores, k_slots, space, taken, out);
  return out;
}

ActionVec recommend_list(const net::NetParams& actor, const StateVec& state,
                         const EmbeddingTable& table, const ItemSpace* space, const Dims& dims,
                         double noise_std, Rng* rng) {
  Eigen::MatrixXd w = generate_weights(actor, state, dims);
  if (noise_std > 0.0) {
    if (!rng) throw std::invalid_argument("recommend_list: exploration needs an rng");
    std::normal_distribution<double> noise(0.0, noise_std);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] += noise(*rng);
  }
  return sim::make_action(select_items(w, table, space), table);
}

double q_value(const net::NetParams& critic, const StateVec& state, const ActionVec& action) {
  Eigen::VectorXd x(state.vec.size() + action.vec.size());
  x << state.vec, action.vec;
  return net::forward(critic, x)(0);
}

double td_target(const Critic& critic, const Actor& actor, const Transition& transition,
                 double gamma, const EmbeddingTable& table) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("td_target: gamma outside [0,1]");
  const StateVec next = sim::make_state(transition.next_state, table);
  const ActionVec next_action =
      recommend_list(actor.target_params, next, table, nullptr, actor.dims);
  return transition.reward + gamma * q_value(critic.target_params, next, next_action);
}

// ---------------------------------------------------------------------------
// Replay

ReplayBuffer::ReplayBuffer(std::size_t capacity, double priority_exponent, double epsilon)
    : capacity_(capacity), exponent_(priority_exponent), epsilon_(epsilon) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
  if (priority_exponent < 0.0) throw std::invalid_argument("ReplayBuffer: negative exponent");
  while (leaves_ < capacity_) leaves_ <<= 1;
  tree_.assign(2 * leaves_, 0.0);
  slots_.reserve(std::min<std::size_t>(capacity_, 4096));
}

void ReplayBuffer::set_leaf(std::size_t slot, double value) {
  std::size_t i = leaves_ + slot;
  tree_[i] = value;
  for (i >>= 1; i >= 1; i >>= 1) tree_[i] = tree_[2 * i] + tree_[2 * i + 1];
}

void ReplayBuffer::push(Transition t) { push(std::move(t), max_priority_); }

void ReplayBuffer::push(Transition t, double priority) {
  if (!(priority > 0.0)) throw std::invalid_argument("ReplayBuffer: priority must be > 0");
  if (slots_.size() < capacity_) {
    slots_.push_back(std::move(t));
    priorities_.push_back(priority);
  } else {
    slots_[next_] = std::move(t);
    priorities_[next_] = priority;
  }
  set_leaf(next_, std::pow(priority, exponent_));
  max_priority_ = std::max(max_priority_, priority);
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch_size, Rng& rng) const {
  if (size_ == 0) throw std::invalid_argument("replay_sample: empty buffer");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> out;
  out.reserve(batch_size);
  const double total = tree_[1];
  for (std::size_t b = 0; b < batch_size; ++b) {
    double u = unit(rng) * total;
    std::size_t i = 1;
    while (i < leaves_) {
      if (u < tree_[2 * i] || tree_[2 * i + 1] <= 0.0) {
        i = 2 * i;
      } else {
        u -= tree_[2 * i];
        i = 2 * i + 1;
      }
    }
    std::size_t slot = i - leaves_;
    if (slot >= size_) slot = size_ - 1;
    out.push_back(slot);
  }
  return out;
}

void ReplayBuffer::update_priority(std::size_t slot, double td_error) {
  if (slot >= size_) throw std::out_of_range("update_priority: slot out of range");
  const double p = std::abs(td_error) + epsilon_;
  priorities_[slot] = p;
  set_leaf(slot, std::pow(p, exponent_));
  max_priority_ = std::max(max_priority_, p);
}

std::vector<std::size_t> ReplayBuffer::order() const {
  std::vector<std::size_t> out;
  out.reserve(size_);
  const std::size_t start = size_ < capacity_ ? 0 : next_;
  for (std::size_t i = 0; i < size_; ++i) out.push_back((start + i) % capacity_);
  return out;
}

void ReplayBuffer::clear() {
  slots_.clear();
  priorities_.clear();
  std::fill(tree_.begin(), tree_.end(), 0.0);
  next_ = 0;
  size_ = 0;
  max_priority_ = 1.0;
}

Minibatch replay_sample(const ReplayBuffer& buffer, std::size_t batch_size, Rng& rng,
                        const EmbeddingTable& table) {
  if (batch_size == 0) throw std::invalid_argument("replay_sample: batch size must be > 0");
  Minibatch mb;
  mb.slots = buffer.sample_indices(batch_size, rng);
  const auto& first = buffer.at(mb.slots[0]);
  const auto d = static_cast<Eigen::Index>(table.dim());
  const auto b = static_cast<Eigen::Index>(batch_size);
  mb.states.resize(d * static_cast<Eigen::Index>(first.state.size()), b);
  mb.actions.resize(d * static_cast<Eigen::Index>(first.action.size()), b);
  mb.next_states.resize(mb.states.rows(), b);
  mb.rewards.resize(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& t = buffer.at(mb.slots[static_cast<std::size_t>(i)]);
    mb.states.col(i) = sim::concat_embeddings(t.state, table);
    mb.actions.col(i) = sim::concat_embeddings(t.action, table);
    mb.next_states.col(i) = sim::concat_embeddings(t.next_state, table);
    mb.rewards(i) = t.reward;
  }
  return mb;
}

Eigen::VectorXd td_targets(const Critic& critic, const Actor& actor, const Minibatch& batch,
                           double gamma, const EmbeddingTable& table) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("td_target: gamma outside [0,1]");
  const Dims& dims = actor.dims;
  const auto b = batch.next_states.cols();
  const Eigen::MatrixXd w = net::forward_batch(actor.target_params, batch.next_states).output();
  // Column b*K + k of the reshaped weights is slot k of sample b.
  const Eigen::Map<const Eigen::MatrixXd> slots(w.data(), static_cast<Eigen::Index>(dims.d),
                                                b * static_cast<Eigen::Index>(dims.k));
  const Eigen::MatrixXd scores = table.matrix() * slots;
  Eigen::MatrixXd next_actions(static_cast<Eigen::Index>(dims.action_dim()), b);
  std::vector<char> taken(table.size());
  std::vector<ItemId> items;
  for (Eigen::Index i = 0; i < b; ++i) {
    std::fill(taken.begin(), taken.end(), 0);
    items.clear();
    greedy_from_scores(scores.middleCols(i * static_cast<Eigen::Index>(dims.k),
                                         static_cast<Eigen::Index>(dims.k)),
                       dims.k, nullptr, taken, items);
    next_actions.col(i) = sim::concat_embeddings(items, table);
  }
  Eigen::MatrixXd x(batch.next_states.rows() + next_actions.rows(), b);
  x << batch.next_states, next_actions;
  const Eigen::RowVectorXd q_next = net::forward_batch(critic.target_params, x).output().row(0);
  return batch.rewards + gamma * q_next.transpose();
}

CriticLoss critic_loss(const net::NetParams& critic, const Eigen::MatrixXd& states,
                       const Eigen::MatrixXd& actions, const Eigen::VectorXd& targets) {
  const auto b = states.cols();
  if (b == 0) throw std::invalid_argument("critic_update: empty minibatch");
  Eigen::MatrixXd x(states.rows() + actions.rows(), b);
  x << states, actions;
  const auto trace = net::forward_batch(critic, x);
  CriticLoss out;
  out.td_errors = targets - trace.output().row(0).transpose();
  out.loss = out.td_errors.squaredNorm() / static_cast<double>(b);
  const Eigen::MatrixXd upstream = (-2.0 / static_cast<double>(b)) * out.td_errors.transpose();
  out.grads = net::backward(critic, trace, upstream, false).grads;
  return out;
}

Eigen::MatrixXd normalize_blocks(const Eigen::MatrixXd& weights, std::size_t d) {
  Eigen::MatrixXd out = weights;
  const auto dd = static_cast<Eigen::Index>(d);
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    for (Eigen::Index r = 0; r < out.rows(); r += dd) {
      auto block = out.col(c).segment(r, dd);
      const double n = block.norm();
      if (n > 0.0) block /= n;
    }
  }
  return out;
}

namespace {

// Chain rule through normalize_blocks: dL/dw = (g - u (u.g)) / |w| per block.
Eigen::MatrixXd normalize_blocks_backward(const Eigen::MatrixXd& weights,
                                          const Eigen::MatrixXd& upstream, std::size_t d) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(weights.rows(), weights.cols());
  const auto dd = static_cast<Eigen::Index>(d);
  for (Eigen::Index c = 0; c < weights.cols(); ++c) {
    for (Eigen::Index r = 0; r < weights.rows(); r += dd) {
      const Eigen::VectorXd w = weights.col(c).segment(r, dd);
      const double n = w.norm();
      if (n == 0.0) continue;
      const Eigen::VectorXd u = w / n;
      const Eigen::VectorXd g = upstream.col(c).segment(r, dd);
      out.col(c).segment(r, dd) = (g - u * u.dot(g)) / n;
    }
  }
  return out;
}

// Column-wise softmax of beta * E w_hat over all items.
Eigen::MatrixXd softmax_scores(const Eigen::MatrixXd& w_hat, const EmbeddingTable& table,
                               double beta) {
  Eigen::MatrixXd s = beta * (table.matrix() * w_hat);
  const Eigen::RowVectorXd mx = s.colwise().maxCoeff();
  s.rowwise() -= mx;
  s = s.array().exp();
  const Eigen::RowVectorXd z = s.colwise().sum();
  s.array().rowwise() /= z.array();
  return s;
}

}  // namespace

Eigen::MatrixXd soft_item_projection(const Eigen::MatrixXd& weights, const EmbeddingTable& table,
                                     double beta) {
  const auto d = static_cast<Eigen::Index>(table.dim());
  const auto blocks = weights.size() / d;
  const Eigen::Map<const Eigen::MatrixXd> w(weights.data(), d, blocks);
  const Eigen::MatrixXd p = softmax_scores(normalize_blocks(w, table.dim()), table, beta);
  Eigen::MatrixXd m = table.matrix().transpose() * p;
  Eigen::MatrixXd out = normalize_blocks(m, table.dim());
  out.resize(weights.rows(), weights.cols());
  return out;
}

ActorObjective actor_objective(const net::NetParams& actor, const net::NetParams& critic,
                               const Eigen::MatrixXd& states, const Dims& dims,
                               const ActionProxy& proxy) {
  const auto b = states.cols();
  if (b == 0) throw std::invalid_argument("actor_update: empty minibatch");
  const auto actor_trace = net::forward_batch(actor, states);
  const Eigen::MatrixXd& w = actor_trace.output();
  const bool soft = proxy.table && proxy.beta > 0.0;

  // Soft path intermediates, one column per (sample, slot) block.
  const auto dd = static_cast<Eigen::Index>(dims.d);
  const auto blocks = b * static_cast<Eigen::Index>(dims.k);
  Eigen::MatrixXd w_hat, p, m;
  Eigen::MatrixXd a;
  if (soft) {
    const Eigen::Map<const Eigen::MatrixXd> wb(w.data(), dd, blocks);
    w_hat = normalize_blocks(wb, dims.d);
    p = softmax_scores(w_hat, *proxy.table, proxy.beta);
    m = proxy.table->matrix().transpose() * p;
    a = normalize_blocks(m, dims.d);
    a.resize(w.rows(), b);
  } else {
    a = normalize_blocks(w, dims.d);
  }

  Eigen::MatrixXd x(states.rows() + a.rows(), b);
  x << states, a;
  const auto critic_trace = net::forward_batch(critic, x);
  ActorObjective out;
  out.mean_q = critic_trace.output().mean();
  const Eigen::MatrixXd upstream =
      Eigen::MatrixXd::Constant(1, b, 1.0 / static_cast<double>(b));
  const auto critic_back = net::backward(critic, critic_trace, upstream);
  Eigen::MatrixXd grad_a = critic_back.input_grad.bottomRows(a.rows());

  Eigen::MatrixXd grad_w;
  if (soft) {
    const auto& e = proxy.table->matrix();
    grad_a.resize(dd, blocks);
    const Eigen::MatrixXd grad_m = normalize_blocks_backward(m, grad_a, dims.d);
    const Eigen::MatrixXd h = e * grad_m;  // dL/dp, items x blocks
    // Softmax backward: dL/ds = beta * p .* (h - p.h) per column.
    const Eigen::RowVectorXd ph = (p.array() * h.array()).colwise().sum();
    const Eigen::MatrixXd grad_s =
        proxy.beta * (p.array() * (h.rowwise() - ph).array()).matrix();
    const Eigen::MatrixXd grad_w_hat = e.transpose() * grad_s;
    const Eigen::Map<const Eigen::MatrixXd> wb(w.data(), dd, blocks);
    grad_w = normalize_blocks_backward(wb, grad_w_hat, dims.d);
    grad_w.resize(w.rows(), b);
  } else {
    grad_w = normalize_blocks_backward(w, grad_a, dims.d);
  }
  out.grads = net::backward(actor, actor_trace, grad_w, false).grads;
  return out;
}

Optimizer::Optimizer(OptimizerKind kind, const net::NetParams& params) : kind_(kind) {
  if (kind_ == OptimizerKind::kAdam) adam_.emplace(params);
}

void Optimizer::step(net::NetParams& params, const net::Grads& grads, double lr) {
  if (adam_) {
    adam_->step(params, grads, lr);
  } else {
    net::apply_update(params, grads, lr);
  }
}

namespace {
Actor make_actor(const Dims& dims, const LearnerConfig& c, Rng& rng) {
  return Actor::create(dims, c.actor_hidden, rng);
}
}  // namespace

DdpgLearner::DdpgLearner(const Dims& dims, const LearnerConfig& config, Rng& init_rng)
    : DdpgLearner(make_actor(dims, config, init_rng),
                  Critic::create(dims, config.critic_hidden, init_rng), config) {}

DdpgLearner::DdpgLearner(Actor actor, Critic critic, const LearnerConfig& config)
    : actor_(std::move(actor)), critic_(std::move(critic)), config_(config),
      actor_opt_(config.optimizer, actor_.params), critic_opt_(config.optimizer, critic_.params) {}

ActionVec DdpgLearner::act(const StateVec& state, const EmbeddingTable& table,
                           const ItemSpace* space, double noise_std, Rng* rng) const {
  return recommend_list(actor_.params, state, table, space, actor_.dims, noise_std, rng);
}

Eigen::VectorXd DdpgLearner::critic_update(const Minibatch& batch, const Eigen::VectorXd& targets,
                                           double* loss_out) {
  auto loss = critic_loss(critic_.params, batch.states, batch.actions, targets);
  if (!std::isfinite(loss.loss)) throw std::runtime_error("critic_update: non-finite loss");
  critic_opt_.step(critic_.params, loss.grads, config_.critic_lr);
  if (loss_out) *loss_out = loss.loss;
  return loss.td_errors;
}

double DdpgLearner::actor_update(const Minibatch& batch, const EmbeddingTable& table) {
  auto obj = actor_objective(actor_.params, critic_.params, batch.states, actor_.dims,
                             ActionProxy{&table, config_.projection_beta});
  obj.grads *= -1.0;  // ascend Q
  actor_opt_.step(actor_.params, obj.grads, config_.actor_lr);
  return obj.mean_q;
}

void DdpgLearner::soft_update_targets() {
  net::soft_update(critic_.target_params, critic_.params, config_.tau);
  net::soft_update(actor_.target_params, actor_.params, config_.tau);
}

UpdateStats DdpgLearner::update(ReplayBuffer& buffer, Rng& rng, const EmbeddingTable& table) {
  const Minibatch batch = replay_sample(buffer, config_.batch_size, rng, table);
  const Eigen::VectorXd targets = td_targets(critic_, actor_, batch, config_.gamma, table);
  UpdateStats stats;
  const Eigen::VectorXd td = critic_update(batch, targets, &stats.critic_loss);
  for (std::size_t i = 0; i < batch.slots.size(); ++i) {
    buffer.update_priority(batch.slots[i], td(static_cast<Eigen::Index>(i)));
  }
  stats.mean_q = actor_update(batch, table);
  soft_update_targets();
  return stats;
}

std::uint64_t DdpgLearner::checksum() const {
  std::uint64_t h = net::checksum(actor_.params);
  h = mix_seed(h ^ net::checksum(actor_.target_params));
  h = mix_seed(h ^ net::checksum(critic_.params));
  return mix_seed(h ^ net::checksum(critic_.target_params));
}

// ---------------------------------------------------------------------------
// Training

StateVec initial_state(const data::Session& session, const Dims& dims,
                       const EmbeddingTable& table) {
  return sim::make_state(sim::pad_state(session.prior_positives, dims.n), table);
}

std::vector<const data::Session*> seedable_sessions(const std::vector<data::Session>& sessions) {
  std::vector<const data::Session*> out;
  for (const auto& s : sessions) {
    if (!s.prior_positives.empty()) out.push_back(&s);
  }
  return out;
}

TrainResult train(const std::vector<data::Session>& sessions, sim::Simulator& simulator,
                  const Dims& dims, const TrainConfig& config) {
  const auto seeds = seedable_sessions(sessions);
  if (seeds.empty()) throw std::invalid_argument("train: empty training set");
  const EmbeddingTable& table = simulator.table();
  if (table.dim() != dims.d) throw std::invalid_argument("train: embedding dimension mismatch");
  if (table.size() < dims.k) throw std::invalid_argument("train: catalog smaller than K");

  Rng init_rng(derive_seed(config.seed, seed_stream::kNetInit));
  Rng rng(derive_seed(config.seed, seed_stream::kTrain));
  TrainResult result{DdpgLearner(dims, config.learner, init_rng), {}};
  DdpgLearner& learner = result.learner;
  ReplayBuffer buffer(config.replay_capacity, config.priority_exponent, config.priority_epsilon);
  std::uniform_int_distribution<std::size_t> pick(0, seeds.size() - 1);
  ItemSpace space(table.size());

  for (std::size_t ep = 0; ep < config.episodes; ++ep) {
    const data::Session& session = *seeds[pick(rng)];
    space.reset();
    StateVec state = initial_state(session, dims, table);
    const double frac =
        config.episodes > 1 ? static_cast<double>(ep) / static_cast<double>(config.episodes - 1) : 0.0;
    const double noise = config.noise_start + (config.noise_end - config.noise_start) * frac;

    EpisodeLog entry;
    entry.episode = ep;
    for (std::size_t t = 0; t < config.steps; ++t) {
      if (config.exclude_recommended && space.remaining() < dims.k) space.reset();
      ActionVec action =
          learner.act(state, table, config.exclude_recommended ? &space : nullptr, noise, &rng);
      if (config.exclude_recommended) {
        for (auto i : action.items) space.remove(i);
      }
      auto outcome = simulator.step(state, action, rng);
      buffer.push({state.items, action.items, outcome.reward, outcome.next_state.items});
      entry.cumulative_reward += outcome.reward;
      state = std::move(outcome.next_state);

      const auto stats = learner.update(buffer, rng, table);
      entry.critic_loss += stats.critic_loss;
      entry.mean_q += stats.mean_q;
    }
    if (config.steps > 0) {
      entry.critic_loss /= static_cast<double>(config.steps);
      entry.mean_q /= static_cast<double>(config.steps);
    }
    simulator.end_episode();
    result.log.push_back(entry);
  }
  return result;
}

void write_training_log(const std::filesystem::path& path, const std::vector<EpisodeLog>& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write training log " + path.string());
  out.precision(17);
  for (const auto& e : log) {
    out << "{\"episode\":" << e.episode << ",\"cumulative_reward\":" << e.cumulative_reward
        << ",\"critic_loss\":" << e.critic_loss << ",\"mean_q\":" << e.mean_q << "}\n";
  }
}

}  // namespace lird::agent
