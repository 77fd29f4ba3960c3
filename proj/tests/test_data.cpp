#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>

#include "lird/data.hpp"
#include "test_util.hpp"

using namespace lird;
using namespace lird::data;
using lird::testing::TempDir;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::vector<Session> numbered_sessions(std::size_t n) {
  std::vector<Session> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i].session_id = static_cast<std::int64_t>(i);
  return out;
}

}  // namespace

TEST(Feedback, TokensRoundTrip) {
  for (auto k : {FeedbackKind::kSkip, FeedbackKind::kClick, FeedbackKind::kOrder}) {
    EXPECT_EQ(parse_feedback(to_token(k)), k);
  }
  EXPECT_FALSE(parse_feedback("buy").has_value());
}

TEST(RewardMap, DefaultsAndValidation) {
  RewardMap r;
  EXPECT_EQ(r(FeedbackKind::kSkip), 0.0);
  EXPECT_EQ(r(FeedbackKind::kClick), 1.0);
  EXPECT_EQ(r(FeedbackKind::kOrder), 5.0);
  EXPECT_NO_THROW(r.validate());
  EXPECT_THROW((RewardMap{0.0, 5.0, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((RewardMap{-1.0, 1.0, 5.0}.validate()), std::invalid_argument);
  EXPECT_THROW((RewardMap{1.0, 1.0, 5.0}.validate()), std::invalid_argument);
}

TEST(LoadSessions, EmptyFileGivesNoSessions) {
  TempDir dir("data");
  write_file(dir / "s.tsv", "");
  EXPECT_TRUE(load_sessions(dir / "s.tsv").empty());
}

TEST(LoadSessions, OneLineWithThreeEvents) {
  TempDir dir("data");
  write_file(dir / "s.tsv", "4\tprior:1,2\tevents:3:skip,5:click,7:order\n");
  const auto s = load_sessions(dir / "s.tsv");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].session_id, 4);
  EXPECT_EQ(s[0].prior_positives, (std::vector<ItemId>{1, 2}));
  ASSERT_EQ(s[0].events.size(), 3u);
  EXPECT_EQ(s[0].events[0], (Event{3, FeedbackKind::kSkip}));
  EXPECT_EQ(s[0].events[1], (Event{5, FeedbackKind::kClick}));
  EXPECT_EQ(s[0].events[2], (Event{7, FeedbackKind::kOrder}));
}

TEST(LoadSessions, UnknownFeedbackNamesLineAndToken) {
  TempDir dir("data");
  write_file(dir / "s.tsv",
             "0\tprior:\tevents:1:click\n"
             "1\tprior:2\tevents:3:buy\n");
  try {
    load_sessions(dir / "s.tsv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("buy"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(LoadSessions, ItemOutsideCatalogRejected) {
  TempDir dir("data");
  write_file(dir / "s.tsv", "0\tprior:1\tevents:10:click\n");
  EXPECT_NO_THROW(load_sessions(dir / "s.tsv"));
  EXPECT_THROW(load_sessions(dir / "s.tsv", 10), ParseError);
  EXPECT_NO_THROW(load_sessions(dir / "s.tsv", 11));
}

TEST(LoadSessions, MalformedRecordsRejected) {
  EXPECT_THROW(parse_session_line("0\tprior:1", 1), ParseError);
  EXPECT_THROW(parse_session_line("x\tprior:1\tevents:", 1), ParseError);
  EXPECT_THROW(parse_session_line("0\tpriors:1\tevents:", 1), ParseError);
  EXPECT_THROW(parse_session_line("0\tprior:1\tevents:3", 1), ParseError);
  EXPECT_THROW(parse_session_line("0\tprior:-1\tevents:", 1), ParseError);
}

TEST(LoadSessions, MissingFileThrows) {
  EXPECT_THROW(load_sessions("/nonexistent/lird/sessions.tsv"), std::runtime_error);
}

TEST(SessionFormat, RoundTripIsByteIdentical) {
  const std::string text =
      "0\tprior:\tevents:\n"
      "1\tprior:4,4,9\tevents:0:skip,1:click,2:order\n"
      "17\tprior:3\tevents:8:skip\n";
  TempDir dir("data");
  write_file(dir / "in.tsv", text);
  save_sessions(dir / "out.tsv", load_sessions(dir / "in.tsv"));
  EXPECT_EQ(read_file(dir / "out.tsv"), text);
}

TEST(SessionFormat, GeneratedLogRoundTrips) {
  SyntheticConfig cfg;
  cfg.n_sessions = 50;
  const auto sessions = generate_synthetic(cfg);
  TempDir dir("data");
  save_sessions(dir / "a.tsv", sessions);
  const auto back = load_sessions(dir / "a.tsv", cfg.catalog_size);
  EXPECT_EQ(back, sessions);
  save_sessions(dir / "b.tsv", back);
  EXPECT_EQ(read_file(dir / "a.tsv"), read_file(dir / "b.tsv"));
}

TEST(Catalog, RoundTripWithLabels) {
  TempDir dir("data");
  Catalog c{3, {"a", "b", "c"}};
  save_catalog(dir / "c.tsv", c);
  const auto back = load_catalog(dir / "c.tsv");
  EXPECT_EQ(back.size, 3u);
  EXPECT_EQ(back.labels, c.labels);
  EXPECT_TRUE(back.contains(2));
  EXPECT_FALSE(back.contains(3));
}

TEST(Catalog, IdsWithoutLabelsAndValidation) {
  TempDir dir("data");
  write_file(dir / "c.tsv", "0\n1\n2\n");
  EXPECT_EQ(load_catalog(dir / "c.tsv").size, 3u);
  write_file(dir / "gap.tsv", "0\n2\n");
  EXPECT_THROW(load_catalog(dir / "gap.tsv"), ParseError);
  write_file(dir / "empty.tsv", "");
  EXPECT_THROW(load_catalog(dir / "empty.tsv"), std::runtime_error);
}

TEST(Split, SeventyPercentOfTen) {
  auto [train, test] = split_sessions(numbered_sessions(10), 0.7);
  ASSERT_EQ(train.size(), 7u);
  ASSERT_EQ(test.size(), 3u);
  EXPECT_EQ(train.back().session_id, 6);
  EXPECT_EQ(test.front().session_id, 7);
}

TEST(Split, FloorBoundaryWithOneSession) {
  auto [train, test] = split_sessions(numbered_sessions(1), 0.7);
  EXPECT_TRUE(train.empty());
  EXPECT_EQ(test.size(), 1u);
}

TEST(Split, HalfOfHundred) {
  auto [train, test] = split_sessions(numbered_sessions(100), 0.5);
  EXPECT_EQ(train.size(), 50u);
  EXPECT_EQ(test.size(), 50u);
  EXPECT_EQ(train.back().session_id, 49);
}

TEST(Split, IsTemporalPrefix) {
  for (double f : {0.1, 0.33, 0.7, 0.99}) {
    auto [train, test] = split_sessions(numbered_sessions(37), f);
    ASSERT_FALSE(test.empty());
    if (!train.empty()) {
      EXPECT_LT(train.back().session_id, test.front().session_id);
    }
    EXPECT_EQ(train.size() + test.size(), 37u);
  }
}

TEST(Split, FractionOutsideOpenUnitIntervalRejected) {
  for (double f : {0.0, 1.0, -0.2, 1.5}) {
    EXPECT_THROW(split_sessions(numbered_sessions(4), f), std::invalid_argument) << f;
  }
}

TEST(ItemCluster, ContiguousBlocksCoverCatalog) {
  std::vector<std::size_t> count(5, 0);
  std::size_t prev = 0;
  for (ItemId i = 0; i < 500; ++i) {
    const auto c = item_cluster(i, 500, 5);
    ASSERT_LT(c, 5u);
    EXPECT_GE(c, prev);
    prev = c;
    ++count[c];
  }
  for (auto n : count) EXPECT_EQ(n, 100u);
}

TEST(Synthetic, SameSeedSameOutput) {
  SyntheticConfig cfg;
  cfg.n_sessions = 200;
  EXPECT_EQ(generate_synthetic(cfg), generate_synthetic(cfg));
  auto other = cfg;
  other.seed = cfg.seed + 1;
  EXPECT_NE(generate_synthetic(cfg), generate_synthetic(other));
}

TEST(Synthetic, ShapeInvariants) {
  SyntheticConfig cfg;
  cfg.n_sessions = 300;
  const auto sessions = generate_synthetic(cfg);
  ASSERT_EQ(sessions.size(), 300u);
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    const auto& x = sessions[s];
    EXPECT_EQ(x.session_id, static_cast<std::int64_t>(s));
    EXPECT_GE(x.prior_positives.size(), cfg.min_prior);
    EXPECT_LE(x.prior_positives.size(), cfg.max_prior);
    EXPECT_GE(x.events.size(), cfg.min_events);
    EXPECT_LE(x.events.size(), cfg.max_events);
    std::set<ItemId> shown;
    for (const auto& e : x.events) {
      EXPECT_LT(e.item, cfg.catalog_size);
      EXPECT_TRUE(shown.insert(e.item).second) << "item repeated within a session";
    }
  }
}

TEST(Synthetic, SingleClusterSharesOneProfile) {
  SyntheticConfig cfg;
  cfg.n_sessions = 100;
  cfg.n_clusters = 1;
  for (auto c : synthetic_user_clusters(cfg)) EXPECT_EQ(c, 0u);
  for (ItemId i = 0; i < cfg.catalog_size; ++i) EXPECT_EQ(item_cluster(i, cfg.catalog_size, 1), 0u);
}

TEST(Synthetic, InClusterPositiveRateExceedsCrossCluster) {
  SyntheticConfig cfg;
  cfg.n_sessions = 1000;
  const auto sessions = generate_synthetic(cfg);
  const auto clusters = synthetic_user_clusters(cfg);
  ASSERT_EQ(clusters.size(), sessions.size());
  double in_pos = 0, in_n = 0, out_pos = 0, out_n = 0;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    for (const auto& e : sessions[s].events) {
      const bool positive = e.feedback != FeedbackKind::kSkip;
      if (item_cluster(e.item, cfg.catalog_size, cfg.n_clusters) == clusters[s]) {
        in_pos += positive;
        ++in_n;
      } else {
        out_pos += positive;
        ++out_n;
      }
    }
  }
  ASSERT_GT(in_n, 1000);
  ASSERT_GT(out_n, 1000);
  EXPECT_GT(in_pos / in_n, out_pos / out_n);
}

TEST(Synthetic, PriorsComeFromTheUsersCluster) {
  SyntheticConfig cfg;
  cfg.n_sessions = 200;
  const auto sessions = generate_synthetic(cfg);
  const auto clusters = synthetic_user_clusters(cfg);
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    for (auto i : sessions[s].prior_positives) {
      EXPECT_EQ(item_cluster(i, cfg.catalog_size, cfg.n_clusters), clusters[s]);
    }
  }
}

TEST(Synthetic, SkipIsTheMostFrequentFeedback) {
  SyntheticConfig cfg;
  const auto sessions = generate_synthetic(cfg);
  std::map<FeedbackKind, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& s : sessions) {
    for (const auto& e : s.events) {
      ++counts[e.feedback];
      ++total;
    }
  }
  ASSERT_GE(total, 10000u);
  EXPECT_GT(counts[FeedbackKind::kSkip], counts[FeedbackKind::kClick]);
  EXPECT_GT(counts[FeedbackKind::kSkip], counts[FeedbackKind::kOrder]);
  EXPECT_GT(counts[FeedbackKind::kClick], 0u);
  EXPECT_GT(counts[FeedbackKind::kOrder], 0u);
}

TEST(Synthetic, InvalidConfigsRejected) {
  SyntheticConfig cfg;
  cfg.n_sessions = 0;
  EXPECT_THROW(generate_synthetic(cfg), std::invalid_argument);
  cfg = {};
  cfg.n_clusters = 0;
  EXPECT_THROW(generate_synthetic(cfg), std::invalid_argument);
  cfg = {};
  cfg.catalog_size = 3;
  cfg.n_clusters = 5;
  EXPECT_THROW(generate_synthetic(cfg), std::invalid_argument);
}

TEST(Synthetic, CatalogLabelsNameClusters) {
  SyntheticConfig cfg;
  const auto c = synthetic_catalog(cfg);
  EXPECT_EQ(c.size, cfg.catalog_size);
  ASSERT_EQ(c.labels.size(), cfg.catalog_size);
  EXPECT_EQ(c.labels.front(), "cluster0");
  EXPECT_EQ(c.labels.back(), "cluster4");
}
