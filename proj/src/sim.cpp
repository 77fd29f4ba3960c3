#include "lird/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace lird::sim {

void SimConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0,1]");
  if (!(gamma_pos > 0.0 && gamma_pos <= 1.0)) {
    throw std::invalid_argument("positional discount must lie in (0,1]");
  }
  if (refresh_every == 0) throw std::invalid_argument("refresh_every must be >= 1");
}

std::vector<ItemId> pad_state(std::span<const ItemId> items, std::size_t n) {
  std::vector<ItemId> out(n, kNullItem);
  const std::size_t take = std::min(n, items.size());
  std::copy(items.end() - static_cast<std::ptrdiff_t>(take), items.end(),
            out.end() - static_cast<std::ptrdiff_t>(take));
  return out;
}

Eigen::VectorXd concat_embeddings(std::span<const ItemId> items, const EmbeddingTable& table) {
  const auto d = static_cast<Eigen::Index>(table.dim());
  Eigen::VectorXd vec = Eigen::VectorXd::Zero(d * static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i] == kNullItem) continue;
    if (items[i] >= table.size()) {
      throw std::out_of_range("item " + std::to_string(items[i]) + " outside embedding table");
    }
    vec.segment(static_cast<Eigen::Index>(i) * d, d) = table.matrix().row(items[i]).transpose();
  }
  return vec;
}

StateVec make_state(std::vector<ItemId> items, const EmbeddingTable& table) {
  StateVec s;
  s.vec = concat_embeddings(items, table);
  s.items = std::move(items);
  return s;
}

ActionVec make_action(std::vector<ItemId> items, const EmbeddingTable& table) {
  std::unordered_set<ItemId> seen;
  for (auto i : items) {
    if (i == kNullItem) throw std::invalid_argument("action contains the null item");
    if (!seen.insert(i).second) throw std::invalid_argument("action items must be distinct");
  }
  ActionVec a;
  a.vec = concat_embeddings(items, table);
  a.items = std::move(items);
  return a;
}

std::vector<ItemId> advance_state(std::span<const ItemId> state, std::span<const ItemId> action,
                                  std::span<const double> rewards) {
  if (action.size() != rewards.size()) {
    throw std::invalid_argument("advance_state: action and reward lengths differ");
  }
  std::vector<ItemId> next(state.begin(), state.end());
  if (next.empty()) return next;
  for (std::size_t k = 0; k < action.size(); ++k) {
    if (rewards[k] > 0.0) {
      next.erase(next.begin());
      next.push_back(action[k]);
    }
  }
  return next;
}

std::vector<MemoryTriple> build_memory(const std::vector<data::Session>& sessions, std::size_t n,
                                       std::size_t k, const EmbeddingTable& table,
                                       const data::RewardMap& rewards) {
  if (k == 0) throw std::invalid_argument("build_memory: K must be >= 1");
  if (n == 0) throw std::invalid_argument("build_memory: N must be >= 1");
  std::vector<MemoryTriple> memory;
  for (const auto& session : sessions) {
    std::vector<ItemId> state = pad_state(session.prior_positives, n);
    for (std::size_t l = 0; l + k <= session.events.size(); l += k) {
      std::vector<ItemId> action;
      RewardPattern r;
      for (std::size_t j = l; j < l + k; ++j) {
        action.push_back(session.events[j].item);
        r.push_back(rewards(session.events[j].feedback));
      }
      const bool empty_state =
          std::all_of(state.begin(), state.end(), [](ItemId i) { return i == kNullItem; });
      if (!empty_state) {
        memory.push_back({make_state(state, table), make_action(action, table), r});
      }
      state = advance_state(state, action, r);
    }
  }
  return memory;
}

namespace {
double checked_norm(const Eigen::VectorXd& v, const char* what) {
  const double n = v.norm();
  if (!(n > 0.0)) throw std::invalid_argument(std::string(what) + " has zero norm");
  return n;
}
}  // namespace

double pair_similarity(const StateVec& state, const ActionVec& action, const MemoryTriple& m,
                       double alpha) {
  const double cs = state.vec.dot(m.state.vec) /
                    (checked_norm(state.vec, "state") * checked_norm(m.state.vec, "memory state"));
  const double ca = action.vec.dot(m.action.vec) / (checked_norm(action.vec, "action") *
                                                    checked_norm(m.action.vec, "memory action"));
  return alpha * cs + (1.0 - alpha) * ca;
}

std::vector<RewardGroup> build_groups(const std::vector<MemoryTriple>& memory) {
  if (memory.empty()) throw std::invalid_argument("build_groups: empty memory");
  std::map<RewardPattern, RewardGroup> by_pattern;
  for (const auto& m : memory) {
    auto [it, inserted] = by_pattern.try_emplace(m.rewards);
    RewardGroup& g = it->second;
    if (inserted) {
      g.pattern = m.rewards;
      g.mean_state = Eigen::VectorXd::Zero(m.state.vec.size());
      g.mean_action = Eigen::VectorXd::Zero(m.action.vec.size());
    }
    g.mean_state += m.state.vec / checked_norm(m.state.vec, "memory state");
    g.mean_action += m.action.vec / checked_norm(m.action.vec, "memory action");
    ++g.count;
  }
  std::vector<RewardGroup> groups;
  groups.reserve(by_pattern.size());
  for (auto& [pattern, g] : by_pattern) {
    g.mean_state /= static_cast<double>(g.count);
    g.mean_action /= static_cast<double>(g.count);
    groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<PatternProbability> group_probabilities(const StateVec& state,
                                                    const ActionVec& action,
                                                    const std::vector<RewardGroup>& groups,
                                                    double alpha) {
  if (groups.empty()) throw std::invalid_argument("group_probabilities: no groups");
  const double ns = checked_norm(state.vec, "state");
  const double na = checked_norm(action.vec, "action");
  std::vector<PatternProbability> out;
  out.reserve(groups.size());
  double total = 0.0;
  for (const auto& g : groups) {
    const double sim = alpha * state.vec.dot(g.mean_state) / ns +
                       (1.0 - alpha) * action.vec.dot(g.mean_action) / na;
    const double score = std::max(0.0, static_cast<double>(g.count) * sim);
    out.push_back({g.pattern, score});
    total += score;
  }
  if (total > 0.0) {
    for (auto& p : out) p.probability /= total;
  } else {
    for (auto& p : out) p.probability = 1.0 / static_cast<double>(out.size());
  }
  return out;
}

std::size_t sample_pattern(const std::vector<PatternProbability>& probabilities, Rng& rng) {
  if (probabilities.empty()) throw std::invalid_argument("sample_pattern: empty distribution");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    acc += probabilities[i].probability;
    if (u < acc) return i;
  }
  // Rounding left u above the final cumulative sum; take the last non-zero entry.
  for (std::size_t i = probabilities.size(); i-- > 0;) {
    if (probabilities[i].probability > 0.0) return i;
  }
  return probabilities.size() - 1;
}

double overall_reward(std::span<const double> pattern, double gamma_pos) {
  double total = 0.0;
  double w = 1.0;
  for (double r : pattern) {
    total += w * r;
    w *= gamma_pos;
  }
  return total;
}

StepResult step(const StateVec& state, const ActionVec& action,
                const std::vector<RewardGroup>& groups, const SimConfig& config,
                const EmbeddingTable& table, Rng& rng) {
  if (action.items.empty()) throw std::invalid_argument("step: empty action");
  const auto probs = group_probabilities(state, action, groups, config.alpha);
  const auto& pattern = probs[sample_pattern(probs, rng)].pattern;
  if (pattern.size() != action.items.size()) {
    throw std::invalid_argument("step: action length differs from memory pattern length");
  }
  StepResult result;
  result.rewards = pattern;
  result.reward = overall_reward(pattern, config.gamma_pos);
  const bool any_positive =
      std::any_of(pattern.begin(), pattern.end(), [](double r) { return r > 0.0; });
  result.next_state =
      any_positive ? make_state(advance_state(state.items, action.items, pattern), table) : state;
  return result;
}

double expected_reward(const StateVec& state, const ActionVec& action,
                       const std::vector<RewardGroup>& groups, const SimConfig& config) {
  double total = 0.0;
  for (const auto& p : group_probabilities(state, action, groups, config.alpha)) {
    total += p.probability * overall_reward(p.pattern, config.gamma_pos);
  }
  return total;
}

Simulator::Simulator(std::vector<MemoryTriple> memory, SimConfig config,
                     const EmbeddingTable& table)
    : memory_(std::move(memory)), config_(config), table_(&table) {
  config_.validate();
  groups_ = build_groups(memory_);
}

StepResult Simulator::step(const StateVec& state, const ActionVec& action, Rng& rng) {
  auto result = sim::step(state, action, groups_, config_, *table_, rng);
  if (config_.append_simulated) memory_.push_back({state, action, result.rewards});
  return result;
}

double Simulator::expected_reward(const StateVec& state, const ActionVec& action) const {
  return sim::expected_reward(state, action, groups_, config_);
}

void Simulator::end_episode() {
  if (++episodes_ % config_.refresh_every != 0) return;
  if (config_.append_simulated) groups_ = build_groups(memory_);
  ++refreshes_;
}

namespace {

constexpr std::string_view kMemoryMagic = "lird-memory v1";

void write_ids(std::ostream& out, const std::vector<ItemId>& ids) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out << ',';
    if (ids[i] == kNullItem) {
      out << '-';
    } else {
      out << ids[i];
    }
  }
}

std::vector<ItemId> read_ids(std::string_view text) {
  std::vector<ItemId> ids;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    const auto tok = text.substr(start, end - start);
    if (tok == "-") {
      ids.push_back(kNullItem);
    } else {
      ItemId v = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw std::runtime_error("memory snapshot: bad item id '" + std::string(tok) + "'");
      }
      ids.push_back(v);
    }
    start = end + 1;
  }
  return ids;
}

}  // namespace

void save_memory(const std::filesystem::path& path, const std::vector<MemoryTriple>& memory,
                 const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write memory snapshot " + path.string());
  out << kMemoryMagic << '\n';
  out << "embedding_checksum " << table.checksum() << '\n';
  out << "triples " << memory.size() << '\n';
  char buf[64];
  for (const auto& m : memory) {
    write_ids(out, m.state.items);
    out << '\t';
    write_ids(out, m.action.items);
    out << '\t';
    for (std::size_t k = 0; k < m.rewards.size(); ++k) {
      if (k) out << ',';
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), m.rewards[k]);
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
}

std::vector<MemoryTriple> load_memory(const std::filesystem::path& path,
                                      const EmbeddingTable& table) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open memory snapshot " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMemoryMagic) {
    throw std::runtime_error("memory snapshot " + path.string() + ": bad header");
  }
  std::string key;
  std::uint64_t checksum = 0;
  std::size_t count = 0;
  if (!(in >> key >> checksum) || key != "embedding_checksum") {
    throw std::runtime_error("memory snapshot: missing embedding checksum");
  }
  if (checksum != table.checksum()) {
    throw std::runtime_error("memory snapshot " + path.string() +
                             " was built with a different embedding table (stale cache)");
  }
  if (!(in >> key >> count) || key != "triples") {
    throw std::runtime_error("memory snapshot: missing triple count");
  }
  std::getline(in, line);
  std::vector<MemoryTriple> memory;
  memory.reserve(count);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      throw std::runtime_error("memory snapshot: malformed triple");
    }
    const std::string_view view(line);
    RewardPattern rewards;
    std::stringstream rs(line.substr(t2 + 1));
    std::string tok;
    while (std::getline(rs, tok, ',')) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc()) throw std::runtime_error("memory snapshot: bad reward");
      rewards.push_back(v);
    }
    memory.push_back({make_state(read_ids(view.substr(0, t1)), table),
                      make_action(read_ids(view.substr(t1 + 1, t2 - t1 - 1)), table),
                      std::move(rewards)});
  }
  if (memory.size() != count) throw std::runtime_error("memory snapshot: truncated");
  return memory;
}

}  // namespace lird::sim
