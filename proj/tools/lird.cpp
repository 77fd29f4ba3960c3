// Command-line driver: one subcommand per pipeline stage, all artifacts in --out.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lird/eval.hpp"
#include "lird/runtime.hpp"

namespace fs = std::filesystem;
using namespace lird;

namespace {

enum class Verbosity { kQuiet, kInfo, kDebug };

Verbosity verbosity() {
  const char* v = std::getenv("LIRD_LOG");
  if (!v) return Verbosity::kInfo;
  const std::string s(v);
  if (s == "quiet" || s == "0") return Verbosity::kQuiet;
  if (s == "debug" || s == "2") return Verbosity::kDebug;
  return Verbosity::kInfo;
}

void log(Verbosity level, const std::string& msg) {
  if (static_cast<int>(level) <= static_cast<int>(verbosity())) std::cerr << "[lird] " << msg << '\n';
}
void info(const std::string& msg) { log(Verbosity::kInfo, msg); }
void debug(const std::string& msg) { log(Verbosity::kDebug, msg); }

struct MissingArtifact : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::string out = "lird_out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<double> alpha;
  std::optional<double> gamma;
  std::optional<std::size_t> sessions;
  std::string length_class;
  std::string sweep_param = "K";
  std::string sweep_values;
};

// Artifact names inside the output directory.
namespace artifact {
const char* const kSessions = "sessions.tsv";
const char* const kCatalog = "catalog.tsv";
const char* const kEmbeddings = "embeddings.txt";
const char* const kEmbedLoss = "embed_loss.txt";
const char* const kMemory = "memory.txt";
const char* const kActor = "actor.ckpt";
const char* const kCritic = "critic.ckpt";
const char* const kActorTarget = "actor_target.ckpt";
const char* const kCriticTarget = "critic_target.ckpt";
const char* const kTrainLog = "train_log.jsonl";
const char* const kEvalCsv = "eval.csv";
const char* const kEvalJson = "eval_summary.json";
const char* const kTiming = "timing.json";
}  // namespace artifact

fs::path need(const Options& o, const char* name, const char* producer) {
  fs::path p = fs::path(o.out) / name;
  if (!fs::exists(p)) {
    throw MissingArtifact("missing " + p.string() + "; run `lird " + producer + "` first");
  }
  return p;
}

Config resolve_config(const Options& o) {
  Config c = o.config_path.empty() ? Config{} : load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.k) c.dims.k = *o.k;
  if (o.alpha) c.sim.alpha = *o.alpha;
  if (o.gamma) c.train.learner.gamma = *o.gamma;
  if (o.sessions) c.generator.n_sessions = *o.sessions;
  c.resolve();
  return c;
}

void echo_config(const Options& o, const Config& c, const std::string& command) {
  fs::create_directories(o.out);
  std::ofstream out(fs::path(o.out) / ("config." + command + ".json"), std::ios::binary);
  out << config_to_json(c);
}

std::vector<data::Session> train_split(const Options& o, const Config& c, std::size_t catalog) {
  auto sessions = data::load_sessions(need(o, artifact::kSessions, "gen"), catalog);
  return data::split_sessions(sessions, c.train_fraction).first;
}

std::pair<std::vector<data::Session>, std::vector<data::Session>> both_splits(
    const Options& o, const Config& c, std::size_t catalog) {
  auto sessions = data::load_sessions(need(o, artifact::kSessions, "gen"), catalog);
  return data::split_sessions(sessions, c.train_fraction);
}

embed::EmbeddingTable load_table(const Options& o, const Config& c) {
  auto table = embed::load_embeddings(need(o, artifact::kEmbeddings, "embed"));
  if (table.dim() != c.dims.d) {
    throw std::runtime_error("embeddings have d=" + std::to_string(table.dim()) +
                             " but the config asks for d=" + std::to_string(c.dims.d) +
                             "; rerun `lird embed`");
  }
  return table;
}

std::vector<sim::MemoryTriple> load_sim_memory(const Options& o, const Config& c,
                                               const embed::EmbeddingTable& table) {
  auto memory = sim::load_memory(need(o, artifact::kMemory, "build-sim"), table);
  if (!memory.empty() && memory.front().action.items.size() != c.dims.k) {
    throw std::runtime_error("simulator memory was built with K=" +
                             std::to_string(memory.front().action.items.size()) +
                             "; rerun `lird build-sim` with the current K");
  }
  return memory;
}

int cmd_gen(const Options& o) {
  const Config c = resolve_config(o);
  echo_config(o, c, "gen");
  const auto sessions = data::generate_synthetic(c.generator);
  data::save_sessions(fs::path(o.out) / artifact::kSessions, sessions);
  data::save_catalog(fs::path(o.out) / artifact::kCatalog, data::synthetic_catalog(c.generator));
  info("gen: " + std::to_string(sessions.size()) + " sessions over " +
       std::to_string(c.generator.catalog_size) + " items");
  return 0;
}

int cmd_embed(const Options& o) {
  const Config c = resolve_config(o);
  echo_config(o, c, "embed");
  const auto catalog = data::load_catalog(need(o, artifact::kCatalog, "gen"));
  const auto train = train_split(o, c, catalog.size);
  const auto result = embed::train_embeddings(train, catalog.size, c.embed);
  embed::save_embeddings(fs::path(o.out) / artifact::kEmbeddings,
                         eval::rl_table(result.table, c.center_embeddings));
  std::ofstream loss(fs::path(o.out) / artifact::kEmbedLoss, std::ios::binary);
  loss.precision(17);
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) loss << e << ' ' << result.epoch_loss[e] << '\n';
  info("embed: " + std::to_string(catalog.size) + " x " + std::to_string(c.dims.d) +
       (result.epoch_loss.empty() ? "" : ", final loss " + std::to_string(result.epoch_loss.back())));
  return 0;
}

int cmd_build_sim(const Options& o) {
  const Config c = resolve_config(o);
  echo_config(o, c, "build-sim");
  const auto table = load_table(o, c);
  const auto train = train_split(o, c, table.size());
  const auto memory = sim::build_memory(train, c.dims.n, c.dims.k, table, c.rewards);
  sim::save_memory(fs::path(o.out) / artifact::kMemory, memory, table);
  info("build-sim: " + std::to_string(memory.size()) + " memory triples, " +
       std::to_string(sim::build_groups(memory).size()) + " reward patterns");
  return 0;
}

void save_learner(const Options& o, const agent::DdpgLearner& learner, std::uint64_t seed) {
  const fs::path dir(o.out);
  net::save_checkpoint(dir / artifact::kActor, {"actor", seed, learner.actor().params});
  net::save_checkpoint(dir / artifact::kCritic, {"critic", seed, learner.critic().params});
  net::save_checkpoint(dir / artifact::kActorTarget, {"actor_target", seed, learner.actor().target_params});
  net::save_checkpoint(dir / artifact::kCriticTarget, {"critic_target", seed, learner.critic().target_params});
}

agent::DdpgLearner load_learner(const Options& o, const Config& c) {
  Rng shape_rng(0);
  const auto shape = agent::Actor::create(c.dims, c.train.learner.actor_hidden, shape_rng);
  const auto critic_shape = agent::Critic::create(c.dims, c.train.learner.critic_hidden, shape_rng);
  const auto actor_arch = net::architecture_of(shape.params);
  const auto critic_arch = net::architecture_of(critic_shape.params);
  agent::Actor actor{
      net::load_checkpoint(need(o, artifact::kActor, "train"), "actor", &actor_arch).params,
      net::load_checkpoint(need(o, artifact::kActorTarget, "train"), "actor_target", &actor_arch).params,
      c.dims};
  agent::Critic critic{
      net::load_checkpoint(need(o, artifact::kCritic, "train"), "critic", &critic_arch).params,
      net::load_checkpoint(need(o, artifact::kCriticTarget, "train"), "critic_target", &critic_arch).params,
      c.dims};
  return agent::DdpgLearner(std::move(actor), std::move(critic), c.train.learner);
}

int cmd_train(const Options& o) {
  const Config c = resolve_config(o);
  echo_config(o, c, "train");
  const auto table = load_table(o, c);
  auto memory = load_sim_memory(o, c, table);
  const auto train = train_split(o, c, table.size());
  sim::Simulator simulator(std::move(memory), c.sim, table);
  info("train: " + std::to_string(c.train.episodes) + " episodes x " + std::to_string(c.train.steps) +
       " steps");
  const auto result = agent::train(train, simulator, c.dims, c.train);
  save_learner(o, result.learner, c.seed);
  agent::write_training_log(fs::path(o.out) / artifact::kTrainLog, result.log);
  if (!result.log.empty()) {
    debug("train: last episode reward " + std::to_string(result.log.back().cumulative_reward));
  }
  return 0;
}

nlohmann::json report_json(const eval::EvalReport& r) {
  return {{"policy", r.policy},
          {"length_class", eval::to_string(r.length_class)},
          {"sessions", r.sessions},
          {"map", r.map},
          {"ndcg", r.ndcg},
          {"mean_cumulative_reward", r.mean_cumulative_reward}};
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

int cmd_eval(const Options& o) {
  const Config c = resolve_config(o);
  echo_config(o, c, "eval");
  const auto table = load_table(o, c);
  const auto memory = load_sim_memory(o, c, table);
  const auto learner = load_learner(o, c);
  auto [train, test] = both_splits(o, c, table.size());

  std::vector<eval::LengthClass> classes{eval::LengthClass::kShort, eval::LengthClass::kLong};
  if (!o.length_class.empty()) classes = {eval::parse_length_class(o.length_class)};

  eval::Prepared prepared;
  prepared.train = std::move(train);
  prepared.test = std::move(test);
  prepared.table = table;
  prepared.memory = memory;
  const auto reports = eval::evaluate_policies(c, prepared, classes, &learner);

  eval::write_eval_csv(fs::path(o.out) / artifact::kEvalCsv, reports);
  nlohmann::json summary = nlohmann::json::array();
  nlohmann::json timing = nlohmann::json::object();
  for (const auto& r : reports) {
    summary.push_back(report_json(r));
    timing[r.policy + "/" + eval::to_string(r.length_class)] = r.seconds_per_action;
  }
  write_json(fs::path(o.out) / artifact::kEvalJson, {{"seed", c.seed}, {"reports", summary}});
  write_json(fs::path(o.out) / artifact::kTiming, {{"seconds_per_action", timing}});
  std::cout << eval::format_report_table(reports);
  return 0;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw std::invalid_argument("bad sweep value '" + tok + "'");
    values.push_back(v);
  }
  if (values.empty()) throw std::invalid_argument("--values must list at least one value");
  return values;
}

int cmd_sweep(const Options& o) {
  const Config c = resolve_config(o);
  echo_config(o, c, "sweep");
  const auto param = eval::parse_sweep_param(o.sweep_param);
  const auto values = parse_values(o.sweep_values);
  info("sweep: " + eval::to_string(param) + " over " + std::to_string(values.size()) + " values");
  const auto rows = eval::sweep(param, values, c);
  const std::string stem = "sweep_" + eval::to_string(param);
  eval::write_sweep_csv(fs::path(o.out) / (stem + ".csv"), rows);
  nlohmann::json j = nlohmann::json::array();
  for (const auto& row : rows) {
    auto r = report_json(row.report);
    r["param"] = eval::to_string(row.param);
    r["value"] = row.value;
    r["label"] = row.label;
    j.push_back(std::move(r));
  }
  write_json(fs::path(o.out) / (stem + ".json"), {{"seed", c.seed}, {"rows", j}});
  std::cout << "value,label,map,ndcg,mean_cumulative_reward\n";
  for (const auto& row : rows) {
    std::cout << row.value << ',' << row.label << ',' << row.report.map << ',' << row.report.ndcg
              << ',' << row.report.mean_cumulative_reward << '\n';
  }
  return 0;
}

// Renders every CSV report present in --out as markdown tables into report.md.
int cmd_report(const Options& o) {
  const fs::path dir(o.out);
  need(o, artifact::kEvalCsv, "eval");
  std::ostringstream md;
  for (const char* name : {"eval.csv", "sweep_K.csv", "sweep_alpha.csv"}) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) continue;
    std::ifstream in(p);
    std::string line;
    md << "## " << name << "\n\n";
    bool header = true;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::string row = "| ";
      for (char ch : line) row += ch == ',' ? std::string(" | ") : std::string(1, ch);
      md << row << " |\n";
      if (header) {
        const auto cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
        md << '|';
        for (std::size_t i = 0; i < cols; ++i) md << " --- |";
        md << '\n';
        header = false;
      }
    }
    md << '\n';
  }
  std::ofstream out(dir / "report.md", std::ios::binary);
  out << md.str();
  std::cout << md.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_allocator();
  CLI::App app{"List-wise recommendation with a simulator-trained actor-critic agent"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Artifact directory");
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--k", o.k, "Recommendation list length K");
    sub->add_option("--alpha", o.alpha, "Simulator state/action blend");
    sub->add_option("--gamma", o.gamma, "Discount factor of the agent");
    sub->add_option("--sessions", o.sessions, "Number of generated sessions");
  };

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Command commands[] = {
      {"gen", "Generate synthetic sessions and catalog", cmd_gen},
      {"embed", "Train item embeddings on the training split", cmd_embed},
      {"build-sim", "Build the simulator memory", cmd_build_sim},
      {"train", "Train the actor-critic agent against the simulator", cmd_train},
      {"eval", "Run the test protocol for every configured policy", cmd_eval},
      {"sweep", "Train and test LIRD for each value of K or alpha", cmd_sweep},
      {"report", "Render eval and sweep CSVs as markdown", cmd_report},
  };
  int (*selected)(const Options&) = nullptr;
  for (const auto& cmd : commands) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    add_common(sub);
    if (std::string(cmd.name) == "eval") {
      sub->add_option("--length-class", o.length_class, "short|long (default: both)")
          ->check(CLI::IsMember({"short", "long"}));
    }
    if (std::string(cmd.name) == "sweep") {
      sub->add_option("--param", o.sweep_param, "K|alpha")->check(CLI::IsMember({"K", "k", "alpha"}));
      sub->add_option("--values", o.sweep_values, "Comma-separated values")->required();
    }
    sub->callback([&selected, run = cmd.run] { selected = run; });
  }

  CLI11_PARSE(app, argc, argv);
  try {
    return selected ? selected(o) : 1;
  } catch (const MissingArtifact& e) {
    std::cerr << "lird: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "lird: " << e.what() << '\n';
    return 1;
  }
}
