#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "lird/eval.hpp"

namespace lird::eval {

embed::EmbeddingTable rl_table(const embed::EmbeddingTable& raw, bool center) {
  return center ? raw.centered().normalized() : raw.normalized();
}

Prepared prepare(const Config& config) {
  Prepared p;
  p.sessions = data::generate_synthetic(config.generator);
  std::tie(p.train, p.test) = data::split_sessions(p.sessions, config.train_fraction);
  const auto raw = embed::train_embeddings(p.train, config.generator.catalog_size, config.embed);
  p.table = rl_table(raw.table, config.center_embeddings);
  p.memory = sim::build_memory(p.train, config.dims.n, config.dims.k, p.table, config.rewards);
  return p;
}

std::vector<EvalReport> evaluate_policies(const Config& config, const Prepared& prepared,
                                          const std::vector<LengthClass>& classes,
                                          const agent::DdpgLearner* trained) {
  const auto& table = prepared.table;
  const std::uint64_t eval_seed = derive_seed(config.seed, seed_stream::kEval);
  std::vector<EvalReport> reports;
  for (const auto& name : config.policies) {
    std::unique_ptr<Policy> policy;
    if (name == "lird") {
      if (trained) {
        policy = std::make_unique<LirdPolicy>(*trained, table, config.train,
                                              config.protocol.online_updates);
      } else {
        sim::Simulator simulator(prepared.memory, config.sim, table);
        auto result = agent::train(prepared.train, simulator, config.dims, config.train);
        policy = std::make_unique<LirdPolicy>(std::move(result.learner), table, config.train,
                                              config.protocol.online_updates);
      }
    } else if (name == "random") {
      policy = std::make_unique<RandomPolicy>(config.dims.k, table);
    } else if (name == "popularity") {
      policy = std::make_unique<PopularityPolicy>(
          baseline_popularity(prepared.train, config.dims.k, table));
    } else if (name == "dqn") {
      sim::Simulator simulator(prepared.memory, config.sim, table);
      policy = std::make_unique<ItemwiseDqnPolicy>(
          baseline_itemwise_dqn(prepared.train, simulator, config), table, config.train,
          config.protocol.online_updates);
    } else {
      throw std::invalid_argument("unknown policy '" + name + "'");
    }
    const sim::Simulator simulator(prepared.memory, config.sim, table);
    for (auto c : classes) {
      reports.push_back(run_test_protocol(*policy, prepared.test, simulator, c, config.dims,
                                          config.protocol, eval_seed));
    }
  }
  return reports;
}

std::string to_string(SweepParam p) { return p == SweepParam::kK ? "K" : "alpha"; }

SweepParam parse_sweep_param(const std::string& s) {
  if (s == "K" || s == "k") return SweepParam::kK;
  if (s == "alpha") return SweepParam::kAlpha;
  throw std::invalid_argument("unknown sweep parameter '" + s + "' (expected K|alpha)");
}

namespace {

std::string format_value(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::vector<SweepRow> sweep(SweepParam param, const std::vector<double>& values,
                            const Config& config) {
  if (values.empty()) throw std::invalid_argument("sweep: no values");
  // Sessions, split and embeddings do not depend on K or alpha.
  Prepared base = prepare(config);
  std::vector<SweepRow> rows;
  for (double v : values) {
    Config c = config;
    SweepRow row;
    row.param = param;
    row.value = v;
    if (param == SweepParam::kK) {
      if (!(v >= 1.0) || v != std::floor(v)) {
        throw std::invalid_argument("sweep: K values must be positive integers");
      }
      c.dims.k = static_cast<std::size_t>(v);
      row.label = "K=" + format_value(v) + (c.dims.k == 1 ? " (item-wise)" : "");
    } else {
      c.sim.alpha = v;
      row.label = "alpha=" + format_value(v);
    }
    c.resolve();
    const auto memory =
        param == SweepParam::kK
            ? sim::build_memory(base.train, c.dims.n, c.dims.k, base.table, c.rewards)
            : base.memory;
    sim::Simulator train_sim(memory, c.sim, base.table);
    auto trained = agent::train(base.train, train_sim, c.dims, c.train);
    LirdPolicy policy(std::move(trained.learner), base.table, c.train, c.protocol.online_updates);
    const sim::Simulator test_sim(memory, c.sim, base.table);
    row.report = run_test_protocol(policy, base.test, test_sim, LengthClass::kLong, c.dims,
                                   c.protocol, derive_seed(c.seed, seed_stream::kEval));
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Report files. Timing is kept out of these so that reruns are byte-identical.

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace

void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports) {
  auto out = open_out(path);
  out << "policy,length_class,sessions,map,ndcg,mean_cumulative_reward\n";
  for (const auto& r : reports) {
    out << r.policy << ',' << to_string(r.length_class) << ',' << r.sessions << ',' << r.map << ','
        << r.ndcg << ',' << r.mean_cumulative_reward << '\n';
  }
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  auto out = open_out(path);
  out << "param,value,label,policy,length_class,sessions,map,ndcg,mean_cumulative_reward\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    out << to_string(row.param) << ',' << row.value << ',' << row.label << ',' << r.policy << ','
        << to_string(r.length_class) << ',' << r.sessions << ',' << r.map << ',' << r.ndcg << ','
        << r.mean_cumulative_reward << '\n';
  }
}

std::string format_report_table(const std::vector<EvalReport>& reports) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "policy" << std::setw(8) << "class" << std::right
     << std::setw(9) << "sessions" << std::setw(10) << "MAP" << std::setw(10) << "NDCG"
     << std::setw(12) << "reward" << '\n';
  os << std::fixed;
  for (const auto& r : reports) {
    os << std::left << std::setw(12) << r.policy << std::setw(8) << to_string(r.length_class)
       << std::right << std::setw(9) << r.sessions << std::setprecision(4) << std::setw(10)
       << r.map << std::setw(10) << r.ndcg << std::setprecision(3) << std::setw(12)
       << r.mean_cumulative_reward << '\n';
  }
  return os.str();
}

}  // namespace lird::eval
