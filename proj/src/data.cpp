#include "lird/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

namespace lird::data {

std::string_view to_token(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::kSkip:
      return "skip";
    case FeedbackKind::kClick:
      return "click";
    case FeedbackKind::kOrder:
      return "order";
  }
  return "skip";
}

std::optional<FeedbackKind> parse_feedback(std::string_view token) {
  if (token == "skip") return FeedbackKind::kSkip;
  if (token == "click") return FeedbackKind::kClick;
  if (token == "order") return FeedbackKind::kOrder;
  return std::nullopt;
}

double RewardMap::operator()(FeedbackKind kind) const {
  switch (kind) {
    case FeedbackKind::kSkip:
      return skip;
    case FeedbackKind::kClick:
      return click;
    case FeedbackKind::kOrder:
      return order;
  }
  return skip;
}

void RewardMap::validate() const {
  if (!(skip >= 0.0 && skip < click && click < order)) {
    throw std::invalid_argument("reward map must satisfy 0 <= skip < click < order");
  }
}

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      break;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

template <typename Int>
bool parse_int(std::string_view text, Int& out) {
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

ItemId parse_item(std::string_view text, std::size_t line_no,
                  const std::optional<std::size_t>& catalog_size) {
  ItemId id = 0;
  if (!parse_int(text, id) || id == kNullItem) {
    throw ParseError(line_no, "bad item id '" + std::string(text) + "'");
  }
  if (catalog_size && id >= *catalog_size) {
    throw ParseError(line_no, "item id " + std::to_string(id) + " >= catalog size " +
                                  std::to_string(*catalog_size));
  }
  return id;
}

}  // namespace

Session parse_session_line(std::string_view line, std::size_t line_no,
                           std::optional<std::size_t> catalog_size) {
  const auto fields = split(line, '\t');
  if (fields.size() != 3) {
    throw ParseError(line_no, "expected 3 tab-separated fields, got " +
                                  std::to_string(fields.size()));
  }
  Session session;
  if (!parse_int(fields[0], session.session_id)) {
    throw ParseError(line_no, "bad session id '" + std::string(fields[0]) + "'");
  }

  constexpr std::string_view kPrior = "prior:";
  constexpr std::string_view kEvents = "events:";
  if (!fields[1].starts_with(kPrior)) throw ParseError(line_no, "missing 'prior:' field");
  if (!fields[2].starts_with(kEvents)) throw ParseError(line_no, "missing 'events:' field");

  const auto prior = fields[1].substr(kPrior.size());
  if (!prior.empty()) {
    for (auto tok : split(prior, ',')) {
      session.prior_positives.push_back(parse_item(tok, line_no, catalog_size));
    }
  }
  const auto events = fields[2].substr(kEvents.size());
  if (!events.empty()) {
    for (auto tok : split(events, ',')) {
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(line_no, "event '" + std::string(tok) + "' lacks ':feedback'");
      }
      const auto fb_token = tok.substr(colon + 1);
      const auto fb = parse_feedback(fb_token);
      if (!fb) {
        throw ParseError(line_no, "unknown feedback token '" + std::string(fb_token) + "'");
      }
      session.events.push_back({parse_item(tok.substr(0, colon), line_no, catalog_size), *fb});
    }
  }
  return session;
}

std::string format_session_line(const Session& session) {
  std::string out = std::to_string(session.session_id);
  out += "\tprior:";
  for (std::size_t i = 0; i < session.prior_positives.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(session.prior_positives[i]);
  }
  out += "\tevents:";
  for (std::size_t i = 0; i < session.events.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(session.events[i].item);
    out += ':';
    out += to_token(session.events[i].feedback);
  }
  return out;
}

std::vector<Session> load_sessions(const std::filesystem::path& path,
                                   std::optional<std::size_t> catalog_size) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open session log " + path.string());
  std::vector<Session> sessions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    sessions.push_back(parse_session_line(line, line_no, catalog_size));
  }
  return sessions;
}

void save_sessions(const std::filesystem::path& path, const std::vector<Session>& sessions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write session log " + path.string());
  for (const auto& s : sessions) out << format_session_line(s) << '\n';
}

Catalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open catalog " + path.string());
  Catalog catalog;
  std::vector<std::pair<ItemId, std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const std::string_view id_text = std::string_view(line).substr(0, tab);
    ItemId id = 0;
    if (!parse_int(id_text, id)) throw ParseError(line_no, "bad item id '" + std::string(id_text) + "'");
    if (id != rows.size()) throw ParseError(line_no, "catalog ids must be contiguous from 0");
    rows.emplace_back(id, tab == std::string::npos ? std::string() : line.substr(tab + 1));
  }
  if (rows.empty()) throw std::runtime_error("catalog " + path.string() + " is empty");
  catalog.size = rows.size();
  const bool any_label =
      std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.second.empty(); });
  if (any_label) {
    for (auto& r : rows) catalog.labels.push_back(std::move(r.second));
  }
  return catalog;
}

void save_catalog(const std::filesystem::path& path, const Catalog& catalog) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write catalog " + path.string());
  for (std::size_t i = 0; i < catalog.size; ++i) {
    out << i;
    if (i < catalog.labels.size() && !catalog.labels[i].empty()) out << '\t' << catalog.labels[i];
    out << '\n';
  }
}

std::pair<std::vector<Session>, std::vector<Session>> split_sessions(
    const std::vector<Session>& sessions, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must lie in (0,1)");
  }
  const auto n_train = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(sessions.size())));
  std::vector<Session> train(sessions.begin(), sessions.begin() + n_train);
  std::vector<Session> test(sessions.begin() + n_train, sessions.end());
  return {std::move(train), std::move(test)};
}

std::size_t item_cluster(ItemId item, std::size_t catalog_size, std::size_t n_clusters) {
  return static_cast<std::size_t>(item) * n_clusters / catalog_size;
}

namespace {

struct ClusterLayout {
  std::vector<std::vector<ItemId>> members;
  std::vector<double> appeal;  // per item, in (0,1], max 1 inside each cluster
};

ClusterLayout make_layout(const SyntheticConfig& cfg, std::mt19937_64& rng) {
  ClusterLayout layout;
  layout.members.resize(cfg.n_clusters);
  layout.appeal.assign(cfg.catalog_size, 0.0);
  for (ItemId i = 0; i < cfg.catalog_size; ++i) {
    layout.members[item_cluster(i, cfg.catalog_size, cfg.n_clusters)].push_back(i);
  }
  for (auto& members : layout.members) {
    auto ranked = members;
    std::shuffle(ranked.begin(), ranked.end(), rng);
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      layout.appeal[ranked[r]] = 1.0 / std::pow(static_cast<double>(r + 1), cfg.appeal_skew);
    }
  }
  return layout;
}

std::vector<double> zipf_weights(std::size_t n, double exponent) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / std::pow(static_cast<double>(i + 1), exponent);
  return w;
}

void validate(const SyntheticConfig& cfg) {
  if (cfg.n_sessions == 0) throw std::invalid_argument("generate_synthetic: zero sessions requested");
  if (cfg.n_clusters == 0 || cfg.catalog_size < cfg.n_clusters) {
    throw std::invalid_argument("generate_synthetic: need catalog_size >= n_clusters >= 1");
  }
  if (cfg.min_prior > cfg.max_prior || cfg.min_events > cfg.max_events) {
    throw std::invalid_argument("generate_synthetic: min must not exceed max");
  }
  if (cfg.max_events > cfg.catalog_size) {
    throw std::invalid_argument("generate_synthetic: max_events exceeds catalog size");
  }
}

std::vector<Session> generate(const SyntheticConfig& cfg, std::vector<std::size_t>* clusters_out) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  const ClusterLayout layout = make_layout(cfg, rng);

  std::vector<ItemId> promoted(cfg.catalog_size);
  for (ItemId i = 0; i < cfg.catalog_size; ++i) promoted[i] = i;
  std::shuffle(promoted.begin(), promoted.end(), rng);
  promoted.resize(std::min(cfg.promoted_pool, cfg.catalog_size));

  const auto cluster_w = zipf_weights(cfg.n_clusters, cfg.cluster_skew);
  std::discrete_distribution<std::size_t> pick_cluster(cluster_w.begin(), cluster_w.end());
  std::vector<std::discrete_distribution<std::size_t>> pick_by_appeal;
  for (const auto& members : layout.members) {
    std::vector<double> w;
    for (auto i : members) w.push_back(layout.appeal[i]);
    pick_by_appeal.emplace_back(w.begin(), w.end());
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<ItemId> any_item(0, static_cast<ItemId>(cfg.catalog_size - 1));
  std::uniform_int_distribution<std::size_t> n_prior(cfg.min_prior, cfg.max_prior);
  std::uniform_int_distribution<std::size_t> n_events(cfg.min_events, cfg.max_events);

  std::vector<Session> sessions;
  sessions.reserve(cfg.n_sessions);
  for (std::size_t s = 0; s < cfg.n_sessions; ++s) {
    const std::size_t cluster = pick_cluster(rng);
    const auto& members = layout.members[cluster];
    if (clusters_out) clusters_out->push_back(cluster);

    Session session;
    session.session_id = static_cast<std::int64_t>(s);
    const std::size_t priors = n_prior(rng);
    for (std::size_t p = 0; p < priors; ++p) {
      session.prior_positives.push_back(members[pick_by_appeal[cluster](rng)]);
    }

    const std::size_t length = n_events(rng);
    std::unordered_set<ItemId> shown;
    std::uniform_int_distribution<std::size_t> in_cluster(0, members.size() - 1);
    std::uniform_int_distribution<std::size_t> in_promoted(0, promoted.size() - 1);
    while (session.events.size() < length) {
      ItemId item;
      const double u = unit(rng);
      if (u < cfg.in_cluster_exposure) {
        item = members[in_cluster(rng)];
      } else if (!promoted.empty() && unit(rng) < cfg.promoted_exposure) {
        item = promoted[in_promoted(rng)];
      } else {
        item = any_item(rng);
      }
      if (!shown.insert(item).second) continue;

      double p_order = cfg.cross_order_prob;
      double p_click = cfg.cross_click_prob;
      if (item_cluster(item, cfg.catalog_size, cfg.n_clusters) == cluster) {
        p_order = cfg.order_prob * layout.appeal[item];
        p_click = cfg.click_prob * layout.appeal[item];
      }
      const double v = unit(rng);
      FeedbackKind fb = FeedbackKind::kSkip;
      if (v < p_order) {
        fb = FeedbackKind::kOrder;
      } else if (v < p_order + p_click) {
        fb = FeedbackKind::kClick;
      }
      session.events.push_back({item, fb});
    }
    sessions.push_back(std::move(session));
  }
  return sessions;
}

}  // namespace

std::vector<Session> generate_synthetic(const SyntheticConfig& config) {
  return generate(config, nullptr);
}

std::vector<std::size_t> synthetic_user_clusters(const SyntheticConfig& config) {
  std::vector<std::size_t> clusters;
  generate(config, &clusters);
  return clusters;
}

Catalog synthetic_catalog(const SyntheticConfig& config) {
  Catalog catalog;
  catalog.size = config.catalog_size;
  for (ItemId i = 0; i < config.catalog_size; ++i) {
    catalog.labels.push_back("cluster" +
                             std::to_string(item_cluster(i, config.catalog_size, config.n_clusters)));
  }
  return catalog;
}

}  // namespace lird::data
