// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "lird/eval.hpp"
#include "lird/runtime.hpp"
#include "test_util.hpp"

using namespace lird;
using lird::testing::flatten;
using lird::testing::numeric_grad;
using lird::testing::random_matrix;
using lird::testing::random_table;
using lird::testing::relative_error;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<ItemId> shuffled_prefix(std::size_t k, std::size_t n, Rng& rng) {
  std::vector<ItemId> all(n);
  std::iota(all.begin(), all.end(), 0u);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(k);
  return all;
}

// 1 --------------------------------------------------------------------------

Outcome simulator_exactness() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  const double values[] = {0.0, 1.0, 5.0};
  for (int m = 0; m < 100; ++m) {
    const std::size_t k = 1 + rng() % 3;
    const std::size_t d = 2 + rng() % 7;
    const std::size_t n = 1 + rng() % 5;
    const std::size_t size = 1 + rng() % 200;
    const std::size_t catalog = 20 + rng() % 30;
    const double alpha = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto table = random_table(catalog, d, rng);

    std::vector<sim::MemoryTriple> memory;
    for (std::size_t i = 0; i < size; ++i) {
      sim::RewardPattern r(k);
      for (auto& x : r) x = values[rng() % 3];
      memory.push_back({sim::make_state(shuffled_prefix(n, catalog, rng), table),
                        sim::make_action(shuffled_prefix(k, catalog, rng), table), r});
    }
    const auto groups = sim::build_groups(memory);
    for (int q = 0; q < 5; ++q) {
      const auto s = sim::make_state(shuffled_prefix(n, catalog, rng), table);
      const auto a = sim::make_action(shuffled_prefix(k, catalog, rng), table);

      std::map<sim::RewardPattern, double> brute;
      for (const auto& t : memory) brute[t.rewards] += sim::pair_similarity(s, a, t, alpha);
      double total = 0.0;
      for (auto& [p, v] : brute) total += (v = std::max(v, 0.0));
      for (auto& [p, v] : brute) v = total > 0 ? v / total : 1.0 / static_cast<double>(brute.size());

      for (const auto& p : sim::group_probabilities(s, a, groups, alpha)) {
        worst = std::max(worst, std::abs(p.probability - brute.at(p.pattern)));
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-9 && secs < 5.0,
          "max |diff| " + fmt("%.2e", worst) + ", " + fmt("%.2f", secs) + " s"};
}

// 2 --------------------------------------------------------------------------

Outcome gradient_checks() {
  const auto t0 = Clock::now();
  double worst_plain = 0.0, worst_composed = 0.0;
  int instances = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(200 + seed);
    const agent::Dims dims{2 + seed % 2, 1 + seed % 3, 3};
    const auto table = random_table(10, dims.d, rng);
    const auto actor = agent::Actor::create(dims, {6}, rng);
    const auto critic = agent::Critic::create(dims, {7, 5}, rng);
    const Eigen::MatrixXd states = random_matrix(static_cast<Eigen::Index>(dims.state_dim()), 4, rng);

    // Actor network.
    const Eigen::MatrixXd up = random_matrix(static_cast<Eigen::Index>(dims.action_dim()), 4, rng);
    auto actor_obj = [&](const net::NetParams& p) {
      return net::forward_batch(p, states).output().cwiseProduct(up).sum();
    };
    const auto ag = net::backward(actor.params, net::forward_batch(actor.params, states), up);
    worst_plain = std::max(worst_plain,
                           relative_error(flatten(ag.grads), numeric_grad(actor.params, actor_obj)));
    ++instances;

    // Critic network through its TD loss.
    const Eigen::MatrixXd actions = random_matrix(static_cast<Eigen::Index>(dims.action_dim()), 4, rng);
    const Eigen::VectorXd y = random_matrix(4, 1, rng, 3.0);
    auto critic_obj = [&](const net::NetParams& p) {
      return agent::critic_loss(p, states, actions, y).loss;
    };
    const auto cl = agent::critic_loss(critic.params, states, actions, y);
    worst_plain = std::max(worst_plain,
                           relative_error(flatten(cl.grads), numeric_grad(critic.params, critic_obj)));
    ++instances;

    // Skip-gram pair loss.
    const Eigen::VectorXd center = random_matrix(3, 1, rng);
    const Eigen::MatrixXd outputs = random_matrix(4, 3, rng);
    Eigen::VectorXd gc;
    Eigen::MatrixXd go;
    embed::sgns_pair_loss(center, outputs, &gc, &go);
    Eigen::VectorXd analytic(gc.size() + go.size()), fd(gc.size() + go.size());
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < gc.size(); ++i) {
      Eigen::VectorXd a = center, b = center;
      a(i) += h;
      b(i) -= h;
      analytic(i) = gc(i);
      fd(i) = (embed::sgns_pair_loss(a, outputs) - embed::sgns_pair_loss(b, outputs)) / (2 * h);
    }
    for (Eigen::Index i = 0; i < go.size(); ++i) {
      Eigen::MatrixXd a = outputs, b = outputs;
      a.data()[i] += h;
      b.data()[i] -= h;
      analytic(gc.size() + i) = go.data()[i];
      fd(gc.size() + i) =
          (embed::sgns_pair_loss(center, a) - embed::sgns_pair_loss(center, b)) / (2 * h);
    }
    worst_plain = std::max(worst_plain, relative_error(analytic, fd));
    ++instances;

    // Composed actor -> proxy -> critic path.
    const agent::ActionProxy proxy = seed % 2 ? agent::ActionProxy{&table, 10.0} : agent::ActionProxy{};
    const auto obj = agent::actor_objective(actor.params, critic.params, states, dims, proxy);
    auto composed = [&](const net::NetParams& p) {
      return agent::actor_objective(p, critic.params, states, dims, proxy).mean_q;
    };
    worst_composed = std::max(worst_composed,
                              relative_error(flatten(obj.grads), numeric_grad(actor.params, composed)));
    ++instances;
  }
  const double secs = seconds_since(t0);
  return {worst_plain < 1e-4 && worst_composed < 1e-3 && instances >= 20 && secs < 30.0,
          std::to_string(instances) + " instances, worst rel err " + fmt("%.2e", worst_plain) +
              " (composed " + fmt("%.2e", worst_composed) + "), " + fmt("%.2f", secs) + " s"};
}

// 3 --------------------------------------------------------------------------

Outcome greedy_oracle() {
  Rng rng(303);
  int mismatches = 0;
  for (int f = 0; f < 200; ++f) {
    const std::size_t n = 4 + rng() % 47;
    const std::size_t d = 2 + rng() % 5;
    const std::size_t k = 1 + rng() % 4;
    auto table_m = random_table(n, d, rng).matrix();
    // Duplicate a few rows so ties actually occur.
    for (std::size_t i = 0; i + 1 < n; i += 7) table_m.row(static_cast<Eigen::Index>(i + 1)) = table_m.row(static_cast<Eigen::Index>(i));
    const embed::EmbeddingTable table(table_m);
    agent::ItemSpace space(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (space.remaining() > k && rng() % 5 == 0) space.remove(static_cast<ItemId>(i));
    }
    const Eigen::MatrixXd w = random_matrix(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d), rng);

    std::vector<ItemId> expect;
    std::vector<char> used(n, 0);
    for (std::size_t slot = 0; slot < k; ++slot) {
      std::size_t best = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (used[i] || !space.contains(static_cast<ItemId>(i))) continue;
        const double s = table_m.row(static_cast<Eigen::Index>(i)).dot(w.row(static_cast<Eigen::Index>(slot)));
        if (best == n || s > table_m.row(static_cast<Eigen::Index>(best)).dot(w.row(static_cast<Eigen::Index>(slot)))) best = i;
      }
      used[best] = 1;
      expect.push_back(static_cast<ItemId>(best));
    }
    if (agent::select_items(w, table, &space) != expect) ++mismatches;
  }
  return {mismatches == 0, "200 fixtures, " + std::to_string(mismatches) + " mismatches"};
}

// 4, 5, 7 ----------------------------------------------------------------------

struct Desk {
  Config config;
  eval::Prepared prepared;
  std::optional<agent::DdpgLearner> trained;
  std::vector<eval::EvalReport> reports;
  double seconds = 0.0;
};

Desk run_desk_pipeline(Config config) {
  Desk desk;
  const auto t0 = Clock::now();
  config.resolve();
  desk.config = config;
  desk.prepared = eval::prepare(config);
  sim::Simulator simulator(desk.prepared.memory, config.sim, desk.prepared.table);
  auto result = agent::train(desk.prepared.train, simulator, config.dims, config.train);
  desk.trained.emplace(std::move(result.learner));
  desk.reports = eval::evaluate_policies(config, desk.prepared, {eval::LengthClass::kLong},
                                         &*desk.trained);
  desk.seconds = seconds_since(t0);
  return desk;
}

const eval::EvalReport& find_report(const Desk& d, const std::string& policy) {
  for (const auto& r : d.reports) {
    if (r.policy == policy) return r;
  }
  throw std::runtime_error("no report for " + policy);
}

Config desk_config() {
  Config c;  // defaults are the desk-scale setting
  c.policies = {"lird", "random", "popularity"};
  return c;
}

Outcome training_lift(const Desk& d) {
  const auto& g = d.config.generator;
  const double lird = find_report(d, "lird").mean_cumulative_reward;
  const double random = find_report(d, "random").mean_cumulative_reward;
  const double pop = find_report(d, "popularity").mean_cumulative_reward;
  const bool shape = g.n_sessions >= 2000 && g.catalog_size == 500 && g.n_clusters == 5;
  std::cout << eval::format_report_table(d.reports);
  return {shape && lird >= 1.5 * random && lird >= 1.1 * pop && d.seconds <= 900.0,
          "lird " + fmt("%.2f", lird) + " vs random " + fmt("%.2f", random) + " (x" +
              fmt("%.2f", lird / random) + "), popularity " + fmt("%.2f", pop) + " (x" +
              fmt("%.2f", lird / pop) + "), pipeline " + fmt("%.0f", d.seconds) + " s"};
}

Outcome gamma_ablation(const Desk& discounted) {
  Config c = discounted.config;
  c.train.learner.gamma = 0.0;
  c.policies = {"lird"};
  const Desk myopic = run_desk_pipeline(c);
  const double r75 = find_report(discounted, "lird").mean_cumulative_reward;
  const double r0 = find_report(myopic, "lird").mean_cumulative_reward;
  std::string detail = "gamma=" + fmt("%.2f", discounted.config.train.learner.gamma) + ": " +
                       fmt("%.2f", r75) + ", gamma=0: " + fmt("%.2f", r0) + " (ratio " +
                       fmt("%.3f", r75 / r0) + (r75 >= r0 ? ", not below" : ", below") +
                       " myopic)";
  return {r75 >= 0.95 * r0, detail};
}

Outcome protocol_fidelity(const Desk& d) {
  const auto& r = find_report(d, "lird");
  const auto snapshot = d.trained->checksum();
  std::size_t start_ok = 0, changed = 0;
  for (const auto& t : r.traces) {
    start_ok += t.start_checksum == snapshot;
    changed += t.end_checksum != t.start_checksum;
  }
  const bool online = d.config.protocol.online_updates;
  return {r.sessions >= 100 && start_ok == r.sessions && online && changed == r.sessions,
          std::to_string(start_ok) + "/" + std::to_string(r.sessions) +
              " sessions start at the snapshot, " + std::to_string(changed) +
              " end with updated parameters"};
}

// 6 --------------------------------------------------------------------------

Outcome selection_cost() {
  const Config c = desk_config();
  const agent::Dims dims = c.dims;
  Rng rng(606);
  const auto table = random_table(10000, dims.d, rng);
  const auto actor = agent::Actor::create(dims, c.train.learner.actor_hidden, rng);
  const auto dqn = eval::ItemwiseDqn::create(dims, c.dqn.hidden, rng);
  std::vector<ItemId> prior(dims.n);
  std::iota(prior.begin(), prior.end(), 0u);
  const auto state = sim::make_state(prior, table);

  auto median_seconds = [](const std::function<void()>& f) {
    f();
    std::vector<double> t;
    for (int i = 0; i < 15; ++i) {
      const auto t0 = Clock::now();
      f();
      t.push_back(seconds_since(t0));
    }
    std::nth_element(t.begin(), t.begin() + 7, t.end());
    return t[7];
  };
  std::size_t sink = 0;
  const double lird = median_seconds([&] {
    sink += agent::recommend_list(actor.params, state, table, nullptr, dims).items[0];
  });
  const double item_wise = median_seconds([&] {
    sink += eval::itemwise_select(dqn.params, state, table, nullptr, dims.k).items[0];
  });
  (void)sink;
  return {item_wise >= 2.0 * lird,
          "LIRD " + fmt("%.3f", lird * 1e3) + " ms vs item-wise DQN " + fmt("%.3f", item_wise * 1e3) +
              " ms per list (x" + fmt("%.1f", item_wise / lird) + ") at |I|=10000"};
}

// 8 --------------------------------------------------------------------------

Outcome metric_oracles() {
  const std::vector<double> a = {5, 1, 0, 0}, b = {0, 0, 0, 0}, c = {0, 5};
  const std::vector<double> p = {1, 0, 0, 0}, q = {0, 1, 0, 1};
  const double errs[] = {
      std::abs(eval::ndcg(a) - 1.0),
      std::abs(eval::ndcg(b) - 0.0),
      std::abs(eval::ndcg(c) - std::log2(2.0) / std::log2(3.0)),
      std::abs(eval::average_precision(p) - 1.0),
      std::abs(eval::average_precision(q) - 0.5),
  };
  const double worst = *std::max_element(std::begin(errs), std::end(errs));
  return {worst < 1e-12, "5 examples, max error " + fmt("%.1e", worst)};
}

// 9 --------------------------------------------------------------------------

Outcome sweep_reproduction() {
  Config c = lird::testing::tiny_config();
  c.train.episodes = 4;
  const std::vector<double> ks = {1, 2, 4, 8}, alphas = {0, 0.2, 0.5, 0.8, 1};
  bool ok = true;
  std::ostringstream peaks;
  for (auto [param, values] : {std::pair{eval::SweepParam::kK, ks}, std::pair{eval::SweepParam::kAlpha, alphas}}) {
    const auto first = eval::sweep(param, values, c);
    const auto second = eval::sweep(param, values, c);
    ok = ok && first.size() == values.size();
    const eval::SweepRow* best = nullptr;
    for (std::size_t i = 0; i < first.size(); ++i) {
      const auto& r = first[i].report;
      const auto& s = second[i].report;
      ok = ok && std::isfinite(r.map) && std::isfinite(r.ndcg) && std::isfinite(r.mean_cumulative_reward);
      ok = ok && r.map >= 0 && r.map <= 1 && r.ndcg >= 0 && r.ndcg <= 1 && r.mean_cumulative_reward >= 0;
      ok = ok && r.map == s.map && r.ndcg == s.ndcg && r.mean_cumulative_reward == s.mean_cumulative_reward;
      std::cout << "  " << first[i].label << ": MAP " << fmt("%.4f", r.map) << " NDCG "
                << fmt("%.4f", r.ndcg) << " reward " << fmt("%.3f", r.mean_cumulative_reward) << '\n';
      if (!best || r.ndcg > best->report.ndcg) best = &first[i];
    }
    if (best) peaks << (peaks.tellp() > 0 ? ", " : "") << "NDCG peak at " << best->label;
  }
  return {ok, "9 rows finite, in range and repeatable; " + peaks.str()};
}

}  // namespace

int main() {
  configure_allocator();
  std::vector<std::pair<std::string, Outcome>> results;
  auto record = [&](const std::string& name, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
    results.push_back({name, o});
  };

  record("1 simulator exactness", simulator_exactness);
  record("2 gradient checks", gradient_checks);
  record("3 greedy-oracle equivalence", greedy_oracle);

  std::optional<Desk> desk;
  std::string desk_error;
  try {
    desk.emplace(run_desk_pipeline(desk_config()));
  } catch (const std::exception& e) {
    desk_error = e.what();
  }
  auto with_desk = [&](Outcome (*f)(const Desk&)) {
    return [&, f]() -> Outcome {
      if (!desk) return {false, "desk pipeline failed: " + desk_error};
      return f(*desk);
    };
  };
  record("4 training lift", with_desk(training_lift));
  record("5 gamma ablation", with_desk(gamma_ablation));
  record("6 action-selection cost", selection_cost);
  record("7 protocol fidelity", with_desk(protocol_fidelity));
  record("8 metric oracles", metric_oracles);
  record("9 sweep reproduction", sweep_reproduction);

  const auto failed = std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.second.pass; });
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << results.size() - static_cast<std::size_t>(failed)
            << "/" << results.size() << std::endl;
  return failed ? 1 : 0;
}
