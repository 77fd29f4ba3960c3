#include "lird/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace lird::agent {
void to_json(nlohmann::json& j, OptimizerKind k) { j = k == OptimizerKind::kSgd ? "sgd" : "adam"; }

void from_json(const nlohmann::json& j, OptimizerKind& k) {
  const auto name = j.get<std::string>();
  if (name == "sgd") {
    k = OptimizerKind::kSgd;
  } else if (name == "adam") {
    k = OptimizerKind::kAdam;
  } else {
    throw std::invalid_argument("unknown optimizer '" + name + "' (expected sgd|adam)");
  }
}
}  // namespace lird::agent

namespace lird {

using nlohmann::json;

namespace {

// One visitor per direction; the bind_* functions below list every field once.
struct Writer {
  json& obj;
  template <typename T>
  void operator()(const char* key, T& ref) {
    obj[key] = ref;
  }
};

struct Reader {
  const json& obj;
  std::string section;
  std::set<std::string> seen;

  template <typename T>
  void operator()(const char* key, T& ref) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    seen.insert(key);
    try {
      ref = it->template get<T>();
    } catch (const std::exception& e) {
      throw std::invalid_argument("config: bad value for " + section + key + ": " + e.what());
    }
  }

  void finish() const {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!seen.count(it.key())) throw std::invalid_argument("config: unknown key " + section + it.key());
    }
  }
};

template <typename F>
void bind_generator(data::SyntheticConfig& g, F& f) {
  f("catalog_size", g.catalog_size);
  f("n_sessions", g.n_sessions);
  f("n_clusters", g.n_clusters);
  f("min_prior", g.min_prior);
  f("max_prior", g.max_prior);
  f("min_events", g.min_events);
  f("max_events", g.max_events);
  f("cluster_skew", g.cluster_skew);
  f("appeal_skew", g.appeal_skew);
  f("in_cluster_exposure", g.in_cluster_exposure);
  f("promoted_exposure", g.promoted_exposure);
  f("promoted_pool", g.promoted_pool);
  f("click_prob", g.click_prob);
  f("order_prob", g.order_prob);
  f("cross_click_prob", g.cross_click_prob);
  f("cross_order_prob", g.cross_order_prob);
}

template <typename F>
void bind_rewards(data::RewardMap& r, F& f) {
  f("skip", r.skip);
  f("click", r.click);
  f("order", r.order);
}

template <typename F>
void bind_embed(embed::SkipGramConfig& e, F& f) {
  f("window", e.window);
  f("n_negative", e.n_negative);
  f("epochs", e.epochs);
  f("learning_rate", e.learning_rate);
}

template <typename F>
void bind_sim(sim::SimConfig& s, F& f) {
  f("alpha", s.alpha);
  f("gamma_pos", s.gamma_pos);
  f("refresh_every", s.refresh_every);
  f("append_simulated", s.append_simulated);
}

template <typename F>
void bind_dims(agent::Dims& d, F& f) {
  f("n", d.n);
  f("k", d.k);
  f("d", d.d);
}

template <typename F>
void bind_train(agent::TrainConfig& t, F& f) {
  f("episodes", t.episodes);
  f("steps", t.steps);
  f("replay_capacity", t.replay_capacity);
  f("priority_exponent", t.priority_exponent);
  f("priority_epsilon", t.priority_epsilon);
  f("noise_start", t.noise_start);
  f("noise_end", t.noise_end);
  f("exclude_recommended", t.exclude_recommended);
  f("actor_hidden", t.learner.actor_hidden);
  f("critic_hidden", t.learner.critic_hidden);
  f("actor_lr", t.learner.actor_lr);
  f("critic_lr", t.learner.critic_lr);
  f("optimizer", t.learner.optimizer);
  f("gamma", t.learner.gamma);
  f("tau", t.learner.tau);
  f("batch_size", t.learner.batch_size);
  f("projection_beta", t.learner.projection_beta);
}

template <typename F>
void bind_protocol(ProtocolConfig& p, F& f) {
  f("short_items", p.short_items);
  f("long_items", p.long_items);
  f("online_updates", p.online_updates);
  f("max_sessions", p.max_sessions);
  f("exclude_recommended", p.exclude_recommended);
}

template <typename F>
void bind_dqn(DqnConfig& q, F& f) {
  f("hidden", q.hidden);
  f("lr", q.lr);
  f("episodes", q.episodes);
  f("candidates", q.candidates);
  f("epsilon_start", q.epsilon_start);
  f("epsilon_end", q.epsilon_end);
}

template <typename Section, typename Bind>
void write_section(json& root, const char* name, Section& s, Bind bind) {
  json obj = json::object();
  Writer w{obj};
  bind(s, w);
  root[name] = std::move(obj);
}

template <typename Section, typename Bind>
void read_section(const json& root, const char* name, Section& s, Bind bind,
                  std::set<std::string>& seen) {
  auto it = root.find(name);
  if (it == root.end()) return;
  seen.insert(name);
  if (!it->is_object()) throw std::invalid_argument(std::string("config: ") + name + " must be an object");
  Reader r{*it, std::string(name) + ".", {}};
  bind(s, r);
  r.finish();
}

#define LIRD_BINDER(fn) [](auto& s, auto& f) { fn(s, f); }

}  // namespace

std::string config_to_json(const Config& config) {
  Config c = config;
  json root = json::object();
  root["seed"] = c.seed;
  write_section(root, "generator", c.generator, LIRD_BINDER(bind_generator));
  root["train_fraction"] = c.train_fraction;
  write_section(root, "rewards", c.rewards, LIRD_BINDER(bind_rewards));
  write_section(root, "embed", c.embed, LIRD_BINDER(bind_embed));
  root["center_embeddings"] = c.center_embeddings;
  write_section(root, "sim", c.sim, LIRD_BINDER(bind_sim));
  write_section(root, "dims", c.dims, LIRD_BINDER(bind_dims));
  write_section(root, "train", c.train, LIRD_BINDER(bind_train));
  write_section(root, "protocol", c.protocol, LIRD_BINDER(bind_protocol));
  write_section(root, "dqn", c.dqn, LIRD_BINDER(bind_dqn));
  root["policies"] = c.policies;
  return root.dump(2) + "\n";
}

void merge_config_json(Config& config, const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!root.is_object()) throw std::invalid_argument("config: top level must be an object");
  Config c = config;
  Reader top{root, "", {}};
  top("seed", c.seed);
  top("train_fraction", c.train_fraction);
  top("center_embeddings", c.center_embeddings);
  top("policies", c.policies);
  read_section(root, "generator", c.generator, LIRD_BINDER(bind_generator), top.seen);
  read_section(root, "rewards", c.rewards, LIRD_BINDER(bind_rewards), top.seen);
  read_section(root, "embed", c.embed, LIRD_BINDER(bind_embed), top.seen);
  read_section(root, "sim", c.sim, LIRD_BINDER(bind_sim), top.seen);
  read_section(root, "dims", c.dims, LIRD_BINDER(bind_dims), top.seen);
  read_section(root, "train", c.train, LIRD_BINDER(bind_train), top.seen);
  read_section(root, "protocol", c.protocol, LIRD_BINDER(bind_protocol), top.seen);
  read_section(root, "dqn", c.dqn, LIRD_BINDER(bind_dqn), top.seen);
  top.finish();
  config = std::move(c);
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  Config c;
  merge_config_json(c, text.str());
  return c;
}

namespace {
void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("config: " + what);
}
bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }
}  // namespace

void Config::resolve() {
  generator.seed = derive_seed(seed, seed_stream::kGenerate);
  embed.seed = derive_seed(seed, seed_stream::kEmbed);
  embed.dim = dims.d;
  train.seed = seed;

  require(dims.n >= 1 && dims.k >= 1 && dims.d >= 1, "dims.n, dims.k and dims.d must be >= 1");
  require(generator.catalog_size >= dims.k, "catalog smaller than K");
  require(generator.n_clusters >= 1 && generator.n_clusters <= generator.catalog_size,
          "n_clusters must be in [1, catalog_size]");
  require(generator.min_prior <= generator.max_prior, "min_prior > max_prior");
  require(generator.min_events <= generator.max_events, "min_events > max_events");
  require(train_fraction > 0.0 && train_fraction < 1.0, "train_fraction must be in (0,1)");
  rewards.validate();
  require(embed.window >= 1 && embed.learning_rate > 0.0, "embed.window and learning_rate");
  sim.validate();
  const auto& l = train.learner;
  require(in_unit(l.gamma), "train.gamma must be in [0,1]");
  require(in_unit(l.tau), "train.tau must be in [0,1]");
  require(l.actor_lr > 0.0 && l.critic_lr > 0.0, "learning rates must be > 0");
  require(l.batch_size >= 1, "train.batch_size must be >= 1");
  require(l.projection_beta >= 0.0, "train.projection_beta must be >= 0");
  require(train.replay_capacity >= 1, "train.replay_capacity must be >= 1");
  require(train.priority_exponent >= 0.0 && train.priority_epsilon > 0.0,
          "priority exponent >= 0 and epsilon > 0");
  require(train.noise_start >= 0.0 && train.noise_end >= 0.0, "exploration noise must be >= 0");
  require(protocol.short_items >= 1 && protocol.long_items >= 1, "protocol item budgets >= 1");
  require(dqn.lr > 0.0 && dqn.candidates >= 1, "dqn.lr > 0 and dqn.candidates >= 1");
  require(in_unit(dqn.epsilon_start) && in_unit(dqn.epsilon_end), "dqn epsilon in [0,1]");
  require(!policies.empty(), "policies must not be empty");
  for (const auto& p : policies) {
    require(p == "lird" || p == "random" || p == "popularity" || p == "dqn",
            "unknown policy '" + p + "'");
  }
}

}  // namespace lird
