#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "lird/eval.hpp"
#include "test_util.hpp"

using namespace lird;
using namespace lird::eval;
using lird::testing::random_table;
using lird::testing::TempDir;
using lird::testing::tiny_config;

namespace {

double dcg(const std::vector<double>& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r[i] / std::log2(static_cast<double>(i) + 2.0);
  return s;
}

double ndcg_oracle(std::vector<double> r) {
  const double actual = dcg(r);
  std::sort(r.begin(), r.end(), std::greater<>());
  const double ideal = dcg(r);
  return ideal > 0 ? actual / ideal : 0.0;
}

double ap_oracle(const std::vector<double>& r) {
  double hits = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] > 0) {
      hits += 1.0;
      sum += hits / static_cast<double>(i + 1);
    }
  }
  return hits > 0 ? sum / hits : 0.0;
}

// Policy whose live checksum drifts from its snapshot unless reset.
class DriftingPolicy final : public Policy {
 public:
  DriftingPolicy(std::size_t k, const embed::EmbeddingTable& table, bool resets)
      : random_(k, table), resets_(resets) {}
  std::string name() const override { return "drift"; }
  void reset() override {
    if (resets_) live_ = 1;
  }
  std::optional<std::uint64_t> snapshot_checksum() const override { return 1; }
  std::optional<std::uint64_t> checksum() const override { return live_; }
  ActionVec act(const StateVec& s, const ItemSpace& space, Rng& rng) override {
    return random_.act(s, space, rng);
  }
  void observe(const StateVec&, const ActionVec&, const sim::StepResult&, Rng&) override { ++live_; }

 private:
  RandomPolicy random_;
  bool resets_;
  std::uint64_t live_ = 1;
};

struct World {
  Config config = tiny_config();
  Prepared prepared = prepare(config);
};

}  // namespace

TEST(Ndcg, WorkedExamples) {
  const std::vector<double> ideal = {5, 1, 0, 0};
  const std::vector<double> zero = {0, 0, 0};
  const std::vector<double> swapped = {0, 5};
  EXPECT_NEAR(ndcg(ideal), 1.0, 1e-12);
  EXPECT_NEAR(ndcg(zero), 0.0, 1e-12);
  EXPECT_NEAR(ndcg(swapped), std::log2(2.0) / std::log2(3.0), 1e-12);
  EXPECT_THROW(ndcg(std::vector<double>{}), std::invalid_argument);
}

TEST(Ndcg, MatchesOracleAndStaysInUnitInterval) {
  Rng rng(1);
  std::uniform_int_distribution<int> pick(0, 2);
  const double values[] = {0.0, 1.0, 5.0};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> r(1 + trial % 8);
    for (auto& x : r) x = values[pick(rng)];
    const double v = ndcg(r);
    EXPECT_NEAR(v, ndcg_oracle(r), 1e-12);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0 + 1e-12);
    std::sort(r.begin(), r.end(), std::greater<>());
    if (r.front() > 0) {
      EXPECT_NEAR(ndcg(r), 1.0, 1e-12);
    }
  }
}

TEST(AveragePrecision, WorkedExamples) {
  const std::vector<double> first = {1, 0, 0, 0};
  const std::vector<double> alternating = {0, 1, 0, 1};
  const std::vector<double> none = {0, 0};
  EXPECT_NEAR(average_precision(first), 1.0, 1e-12);
  EXPECT_NEAR(average_precision(alternating), 0.5, 1e-12);
  EXPECT_NEAR(average_precision(none), 0.0, 1e-12);
  EXPECT_THROW(average_precision(std::vector<double>{}), std::invalid_argument);
}

TEST(AveragePrecision, MatchesOracleAndIgnoresGrade) {
  Rng rng(2);
  std::uniform_int_distribution<int> pick(0, 2);
  const double values[] = {0.0, 1.0, 5.0};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> r(1 + trial % 8);
    for (auto& x : r) x = values[pick(rng)];
    EXPECT_NEAR(average_precision(r), ap_oracle(r), 1e-12);
    std::vector<double> binary = r;
    for (auto& x : binary) x = x > 0 ? 1.0 : 0.0;
    EXPECT_NEAR(average_precision(r), average_precision(binary), 1e-12);
  }
}

TEST(RandomPolicy, DistinctAvailableAndCoversSpace) {
  Rng rng(3);
  const auto table = random_table(10, 3, rng);
  ItemSpace space(10);
  space.remove(0);
  space.remove(9);
  RandomPolicy policy(3, table);
  std::vector<std::size_t> counts(10, 0);
  for (int i = 0; i < 4000; ++i) {
    const auto a = policy.act({}, space, rng);
    ASSERT_EQ(a.items.size(), 3u);
    EXPECT_EQ(std::set<ItemId>(a.items.begin(), a.items.end()).size(), 3u);
    for (auto item : a.items) {
      EXPECT_TRUE(space.contains(item));
      ++counts[item];
    }
  }
  EXPECT_EQ(counts[0], 0u);
  for (ItemId i = 1; i < 9; ++i) EXPECT_NEAR(counts[i] / 12000.0, 1.0 / 8.0, 0.02);
}

TEST(Popularity, RankingCountsPositivesWithStableTies) {
  data::Session a;
  a.prior_positives = {3};
  a.events = {{1, data::FeedbackKind::kClick}, {2, data::FeedbackKind::kSkip},
              {3, data::FeedbackKind::kOrder}};
  data::Session b;
  b.events = {{1, data::FeedbackKind::kClick}, {0, data::FeedbackKind::kClick}};
  const auto ranking = popularity_ranking({a, b}, 5);
  EXPECT_EQ(ranking, (std::vector<ItemId>{1, 3, 0, 2, 4}));
}

TEST(Popularity, SkipsStateItemsAndUsedItems) {
  Rng rng(4);
  const auto table = random_table(6, 2, rng);
  PopularityPolicy policy({5, 4, 3, 2, 1, 0}, 2, table);
  ItemSpace space(6);
  space.remove(4);
  const auto state = sim::make_state({kNullItem, 5}, table);
  EXPECT_EQ(policy.act(state, space, rng).items, (std::vector<ItemId>{3, 2}));
  for (ItemId i = 0; i < 4; ++i) space.remove(i);
  EXPECT_THROW(policy.act(state, space, rng), std::invalid_argument);
}

TEST(StepBudget, CoversItemBudget) {
  ProtocolConfig p;
  EXPECT_EQ(step_budget(LengthClass::kShort, 4, p), 10u);
  EXPECT_EQ(step_budget(LengthClass::kLong, 3, p), 27u);
  EXPECT_EQ(parse_length_class(to_string(LengthClass::kShort)), LengthClass::kShort);
  EXPECT_THROW(parse_length_class("medium"), std::invalid_argument);
}

TEST(ItemwiseSelect, MatchesPerItemForwards) {
  Rng rng(5);
  const agent::Dims dims{3, 4, 5};
  const auto table = random_table(40, 5, rng);
  const auto dqn = ItemwiseDqn::create(dims, {12}, rng);
  const auto state = sim::make_state({1, 2, 3}, table);
  ItemSpace space(40);
  space.remove(7);
  std::vector<std::pair<double, ItemId>> scored;
  for (ItemId i = 0; i < 40; ++i) {
    if (!space.contains(i)) continue;
    Eigen::VectorXd x(state.vec.size() + 5);
    x << state.vec, table.lookup(i);
    scored.push_back({-net::forward(dqn.params, x)(0), i});
  }
  std::sort(scored.begin(), scored.end());
  const auto picked = itemwise_select(dqn.params, state, table, &space, 4);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(picked.items[j], scored[j].second);
}

TEST(ItemwiseTargets, GammaZeroIsRewardAndMaxOtherwise) {
  Rng rng(6);
  const agent::Dims dims{2, 1, 3};
  const auto table = random_table(10, 3, rng);
  const auto dqn = ItemwiseDqn::create(dims, {8}, rng);
  agent::Minibatch batch;
  batch.next_states = lird::testing::random_matrix(6, 2, rng);
  batch.rewards = Eigen::Vector2d(1.0, 5.0);
  const std::vector<ItemId> candidates = {2, 5, 7};
  EXPECT_EQ(itemwise_targets(dqn.target_params, batch, 0.0, candidates, table), batch.rewards);
  const auto y = itemwise_targets(dqn.target_params, batch, 0.5, candidates, table);
  for (Eigen::Index b = 0; b < 2; ++b) {
    double best = -1e300;
    for (auto c : candidates) {
      Eigen::VectorXd x(9);
      x << batch.next_states.col(b), table.lookup(c);
      best = std::max(best, net::forward(dqn.target_params, x)(0));
    }
    EXPECT_NEAR(y(b), batch.rewards(b) + 0.5 * best, 1e-12);
  }
}

TEST(ItemwiseDqn, StoresOneTransitionPerSlot) {
  Rng rng(7);
  const agent::Dims dims{2, 2, 3};
  const auto table = random_table(10, 3, rng);
  ItemwiseDqnLearner learner(ItemwiseDqn::create(dims, {8}, rng), {}, 0.5, 0.01, 4);
  agent::ReplayBuffer buffer(10);
  sim::StepResult outcome;
  outcome.rewards = {1.0, 0.0};
  outcome.next_state = sim::make_state({3, 4}, table);
  learner.store(buffer, sim::make_state({1, 2}, table), sim::make_action({5, 6}, table), outcome);
  ASSERT_EQ(buffer.size(), 2u);
  EXPECT_EQ(buffer.at(0).action, (std::vector<ItemId>{5}));
  EXPECT_EQ(buffer.at(1).reward, 0.0);
  const auto before = learner.checksum();
  EXPECT_TRUE(std::isfinite(learner.update(buffer, rng, table)));
  EXPECT_NE(learner.checksum(), before);
}

TEST(Protocol, CheckpointRestoredAtEverySessionStart) {
  World w;
  sim::Simulator simulator(w.prepared.memory, w.config.sim, w.prepared.table);
  auto trained = agent::train(w.prepared.train, simulator, w.config.dims, w.config.train);
  LirdPolicy policy(trained.learner, w.prepared.table, w.config.train, true);
  const auto report = run_test_protocol(policy, w.prepared.test, simulator, LengthClass::kShort,
                                        w.config.dims, w.config.protocol, 11);
  ASSERT_EQ(report.sessions, 10u);
  for (const auto& t : report.traces) {
    EXPECT_EQ(t.start_checksum, trained.learner.checksum());
    EXPECT_NE(t.end_checksum, t.start_checksum);
  }
}

TEST(Protocol, FrozenPolicyKeepsChecksum) {
  World w;
  sim::Simulator simulator(w.prepared.memory, w.config.sim, w.prepared.table);
  Rng init(1);
  LirdPolicy policy(agent::DdpgLearner(w.config.dims, w.config.train.learner, init),
                    w.prepared.table, w.config.train, false);
  const auto report = run_test_protocol(policy, w.prepared.test, simulator, LengthClass::kShort,
                                        w.config.dims, w.config.protocol, 11);
  for (const auto& t : report.traces) EXPECT_EQ(t.end_checksum, t.start_checksum);
}

TEST(Protocol, LeakedParametersDetected) {
  World w;
  sim::Simulator simulator(w.prepared.memory, w.config.sim, w.prepared.table);
  DriftingPolicy leaky(w.config.dims.k, w.prepared.table, false);
  EXPECT_THROW(run_test_protocol(leaky, w.prepared.test, simulator, LengthClass::kShort,
                                 w.config.dims, w.config.protocol, 1),
               std::runtime_error);
  DriftingPolicy resetting(w.config.dims.k, w.prepared.table, true);
  EXPECT_NO_THROW(run_test_protocol(resetting, w.prepared.test, simulator, LengthClass::kShort,
                                    w.config.dims, w.config.protocol, 1));
}

TEST(Protocol, MetricsInRangeAndSeedDeterministic) {
  World w;
  sim::Simulator simulator(w.prepared.memory, w.config.sim, w.prepared.table);
  RandomPolicy policy(w.config.dims.k, w.prepared.table);
  const auto a = run_test_protocol(policy, w.prepared.test, simulator, LengthClass::kLong,
                                   w.config.dims, w.config.protocol, 3);
  const auto b = run_test_protocol(policy, w.prepared.test, simulator, LengthClass::kLong,
                                   w.config.dims, w.config.protocol, 3);
  EXPECT_EQ(a.mean_cumulative_reward, b.mean_cumulative_reward);
  EXPECT_EQ(a.map, b.map);
  for (const auto& t : a.traces) {
    EXPECT_GE(t.map, 0.0);
    EXPECT_LE(t.map, 1.0);
    EXPECT_GE(t.ndcg, 0.0);
    EXPECT_LE(t.ndcg, 1.0);
    EXPECT_GE(t.cumulative_reward, 0.0);
  }
}

TEST(Pipeline, EvaluatePoliciesReportsEveryPolicyAndClass) {
  World w;
  w.config.policies = {"lird", "random", "popularity", "dqn"};
  const auto reports =
      evaluate_policies(w.config, w.prepared, {LengthClass::kShort, LengthClass::kLong});
  ASSERT_EQ(reports.size(), 8u);
  for (const auto& r : reports) {
    EXPECT_TRUE(std::isfinite(r.mean_cumulative_reward)) << r.policy;
    EXPECT_EQ(r.sessions, 10u);
  }
  EXPECT_EQ(reports[0].policy, "lird");
  EXPECT_EQ(reports[6].policy, "dqn");
}

TEST(Pipeline, RlTableIsUnitAndOptionallyCentred) {
  Rng rng(8);
  const auto raw = random_table(20, 4, rng, false);
  const auto t = rl_table(raw, false);
  for (ItemId i = 0; i < 20; ++i) EXPECT_NEAR(t.lookup(i).norm(), 1.0, 1e-12);
  EXPECT_EQ(rl_table(raw, true).matrix(), raw.centered().normalized().matrix());
}

TEST(Sweep, KValuesGiveOneFiniteRowEach) {
  auto c = tiny_config();
  c.train.episodes = 3;
  const auto rows = sweep(SweepParam::kK, {1, 2, 4, 8}, c);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].label, "K=1 (item-wise)");
  for (const auto& r : rows) {
    EXPECT_TRUE(std::isfinite(r.report.mean_cumulative_reward));
    EXPECT_GE(r.report.map, 0.0);
    EXPECT_LE(r.report.ndcg, 1.0);
  }
  EXPECT_THROW(sweep(SweepParam::kK, {1.5}, c), std::invalid_argument);
  EXPECT_THROW(sweep(SweepParam::kK, {}, c), std::invalid_argument);
}

TEST(Sweep, CsvIsByteDeterministic) {
  auto c = tiny_config();
  c.train.episodes = 2;
  TempDir dir("eval");
  write_sweep_csv(dir / "a.csv", sweep(SweepParam::kAlpha, {0.0, 1.0}, c));
  write_sweep_csv(dir / "b.csv", sweep(SweepParam::kAlpha, {0.0, 1.0}, c));
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const auto text = slurp(dir / "a.csv");
  EXPECT_EQ(text, slurp(dir / "b.csv"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_EQ(parse_sweep_param("alpha"), SweepParam::kAlpha);
  EXPECT_THROW(parse_sweep_param("beta"), std::invalid_argument);
}
