#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lird {

/// Index into a contiguous item catalog.
using ItemId = std::uint32_t;

/// Reserved id used to left-pad states that have fewer than N positives.
/// Its embedding is the zero vector.
inline constexpr ItemId kNullItem = std::numeric_limits<ItemId>::max();

}  // namespace lird

namespace lird::data {

enum class FeedbackKind : std::uint8_t { kSkip = 0, kClick = 1, kOrder = 2 };

std::string_view to_token(FeedbackKind kind);
std::optional<FeedbackKind> parse_feedback(std::string_view token);

/// Reward value per feedback kind. Invariant: skip < click < order, skip >= 0.
struct RewardMap {
  double skip = 0.0;
  double click = 1.0;
  double order = 5.0;

  double operator()(FeedbackKind kind) const;
  void validate() const;
};

struct Event {
  ItemId item = 0;
  FeedbackKind feedback = FeedbackKind::kSkip;

  friend bool operator==(const Event&, const Event&) = default;
};

struct Session {
  std::int64_t session_id = 0;
  std::vector<ItemId> prior_positives;
  std::vector<Event> events;

  friend bool operator==(const Session&, const Session&) = default;
};

struct Catalog {
  std::size_t size = 0;
  std::vector<std::string> labels;  // empty or one per item

  bool contains(ItemId id) const { return id < size; }
};

/// Parse failure carrying the 1-based line number of the offending record.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Session log: one record per line,
//   session_id<TAB>prior:id,id,...<TAB>events:id:feedback,id:feedback,...
Session parse_session_line(std::string_view line, std::size_t line_no,
                           std::optional<std::size_t> catalog_size = std::nullopt);
std::string format_session_line(const Session& session);

/// Reads a session log. Throws std::runtime_error if the file is missing and
/// ParseError (with line number) on malformed records or out-of-catalog ids.
std::vector<Session> load_sessions(const std::filesystem::path& path,
                                   std::optional<std::size_t> catalog_size = std::nullopt);
void save_sessions(const std::filesystem::path& path, const std::vector<Session>& sessions);

Catalog load_catalog(const std::filesystem::path& path);
void save_catalog(const std::filesystem::path& path, const Catalog& catalog);

/// Temporal-prefix split; |train| = floor(train_fraction * total).
std::pair<std::vector<Session>, std::vector<Session>> split_sessions(
    const std::vector<Session>& sessions, double train_fraction);

struct SyntheticConfig {
  std::size_t catalog_size = 500;
  std::size_t n_sessions = 2000;
  std::size_t n_clusters = 5;
  std::uint64_t seed = 1;

  std::size_t min_prior = 5;
  std::size_t max_prior = 10;
  std::size_t min_events = 8;
  std::size_t max_events = 40;

  // Zipf exponent of cluster shares among users; 0 gives equal shares.
  double cluster_skew = 0.0;
  // Zipf exponent of item appeal inside a cluster.
  double appeal_skew = 0.8;
  // Share of logged impressions drawn from the user's own cluster by the
  // historical recommender; the rest are drawn catalog-wide.
  double in_cluster_exposure = 0.35;
  // Share of catalog-wide impressions taken from a small promoted pool.
  double promoted_exposure = 0.3;
  std::size_t promoted_pool = 20;

  // Feedback probabilities for an in-cluster item of maximal appeal; scaled
  // by appeal. Out-of-cluster items use the cross_* rates.
  double click_prob = 0.55;
  double order_prob = 0.15;
  double cross_click_prob = 0.04;
  double cross_order_prob = 0.005;
};

/// Cluster of an item under the generator's contiguous-block assignment.
std::size_t item_cluster(ItemId item, std::size_t catalog_size, std::size_t n_clusters);

/// Synthetic cluster-preference sessions. Deterministic in config.seed.
/// Sessions are emitted in temporal order with ascending session ids.
std::vector<Session> generate_synthetic(const SyntheticConfig& config);

/// Latent cluster of every generated session's user, same order as
/// generate_synthetic's output (the generator re-derives it from the seed).
std::vector<std::size_t> synthetic_user_clusters(const SyntheticConfig& config);

Catalog synthetic_catalog(const SyntheticConfig& config);

}  // namespace lird::data
