#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "usagelog/relation_graph.hpp"
#include "usagelog/sessions.hpp"
#include "usagelog/synth.hpp"

using namespace usagelog;
using namespace std::chrono_literals;

namespace {

const UtcTime t0 = parse_utc("2005-11-11T00:00:00Z").value();

std::vector<UsageRecord> random_log(std::mt19937_64& rng, std::size_t n, std::uint32_t clusters,
                                    std::uint32_t requesters) {
  std::vector<UsageRecord> rs;
  std::vector<SessionRecord> srs;
  std::vector<std::string> names;
  for (std::uint32_t r = 0; r < requesters; ++r) names.push_back("urn:ip:" + std::to_string(r));
  for (std::size_t i = 0; i < n; ++i) {
    UsageRecord r;
    r.cluster = static_cast<std::uint32_t>(rng() % clusters);
    r.requester = static_cast<std::uint32_t>(rng() % requesters);
    r.time = t0 + std::chrono::seconds(rng() % 20000);
    r.event_id = testing_support::random_uuid(rng);
    rs.push_back(r);
  }
  for (const auto& r : rs) srs.push_back({names[r.requester], r.time, r.event_id});
  const auto sessions = sessionize(srs, 30.0);
  for (std::size_t i = 0; i < rs.size(); ++i) rs[i].session = sessions[i];
  return rs;
}

std::vector<std::string> labels_for(std::uint32_t n) {
  std::vector<std::string> l;
  for (std::uint32_t i = 0; i < n; ++i) l.push_back("c" + std::to_string(i));
  return l;
}

void expect_graph_equals(const RelationGraph& g, const std::map<std::pair<std::uint32_t, std::uint32_t>, double>& want) {
  const auto edges = g.edges();
  ASSERT_EQ(edges.size(), want.size());
  for (const auto& e : edges) {
    const auto it = want.find({e.src, e.dst});
    ASSERT_NE(it, want.end()) << e.src << "->" << e.dst;
    EXPECT_NEAR(e.weight, it->second, 1e-9 * std::max(1.0, it->second));
  }
}

}  // namespace

TEST(Sessions, GapSplitsAndRequestersSeparate) {
  const Uuid a = uuid_v4_from(1, 1), b = uuid_v4_from(1, 2), c = uuid_v4_from(1, 3), d = uuid_v4_from(1, 4);
  std::vector<SessionRecord> rs{{"urn:ip:b", t0, a},
                                {"urn:ip:a", t0 + 29min, b},
                                {"urn:ip:a", t0, c},
                                {"urn:ip:a", t0 + 59min, d}};
  const auto s = sessionize(rs, 30.0);
  EXPECT_EQ(s[2], 0u);
  EXPECT_EQ(s[1], 0u);
  EXPECT_EQ(s[3], 1u);  // exactly 30 minutes later
  EXPECT_EQ(s[0], 2u);
}

TEST(Sessions, EventOverloadMatchesGroundTruth) {
  SynthConfig c;
  c.n_events = 20000;
  c.n_requesters = 500;
  c.n_referents = 2000;
  c.n_journals = 50;
  GroundTruth truth;
  const auto events = generate_events(c, &truth);
  const auto got = sessionize(events, c.session_gap_minutes);
  ASSERT_EQ(got.size(), truth.true_sessions.size());
  for (const auto& [id, s] : truth.true_sessions) EXPECT_EQ(got.at(id), s);
}

TEST(RelationGraph, ConstructionSemantics) {
  RelationGraph g(labels_for(3), {{0, 1, 1.0}, {0, 1, 2.0}, {1, 1, 5.0}, {2, 0, -1.0}, {1, 0, 4.0}}, true);
  EXPECT_EQ(g.edge_count(), 2u);
  EXPECT_EQ(g.weight(0, 1), 3.0);
  EXPECT_EQ(g.weight(1, 0), 4.0);
  EXPECT_EQ(g.weight(1, 1), 0.0);
  EXPECT_EQ(g.total_weight(), 7.0);
  RelationGraph u(labels_for(3), {{0, 1, 1.0}, {1, 0, 2.0}, {2, 1, 1.0}}, false);
  EXPECT_EQ(u.edge_count(), 2u);
  EXPECT_EQ(u.weight(0, 1), 3.0);
  EXPECT_EQ(u.weight(1, 0), 3.0);
  EXPECT_EQ(u.total_weight(), 4.0);
  EXPECT_EQ(u.find("c2"), 2u);
  EXPECT_FALSE(u.find("zz"));
}

TEST(RelationGraph, TransitionExample) {
  std::vector<UsageRecord> rs{{0, 0, 0, t0, uuid_v4_from(0, 1)},
                              {1, 0, 0, t0 + 1min, uuid_v4_from(0, 2)},
                              {1, 0, 0, t0 + 2min, uuid_v4_from(0, 3)},
                              {2, 0, 0, t0 + 3min, uuid_v4_from(0, 4)},
                              {0, 1, 1, t0, uuid_v4_from(0, 5)},
                              {1, 1, 1, t0 + 1min, uuid_v4_from(0, 6)}};
  const auto g = build_relation_graph(rs, {1.0, 0.5}, labels_for(3), GraphMode::Transition);
  EXPECT_EQ(g.node_count(), 3u);
  EXPECT_DOUBLE_EQ(g.weight(0, 1), 1.5);
  EXPECT_DOUBLE_EQ(g.weight(1, 2), 1.0);
  EXPECT_EQ(g.weight(1, 0), 0.0);
  const auto z = build_relation_graph(rs, {0.0, 0.0}, labels_for(3), GraphMode::Transition);
  EXPECT_EQ(z.edge_count(), 0u);
}

TEST(RelationGraph, CoAccessIsSymmetricAndCapped) {
  std::vector<UsageRecord> rs{{0, 0, 0, t0, uuid_v4_from(0, 1)},
                              {1, 0, 5, t0 + 9h, uuid_v4_from(0, 2)},
                              {0, 0, 6, t0 + 20h, uuid_v4_from(0, 3)},
                              {2, 1, 1, t0, uuid_v4_from(0, 4)},
                              {1, 1, 1, t0 + 1min, uuid_v4_from(0, 5)}};
  const auto g = build_relation_graph(rs, {3.0, 0.25}, labels_for(3), GraphMode::CoAccess);
  EXPECT_FALSE(g.directed());
  EXPECT_DOUBLE_EQ(g.weight(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(g.weight(1, 2), 0.25);
  for (std::uint32_t i = 0; i < 3; ++i)
    for (std::uint32_t j = 0; j < 3; ++j) EXPECT_EQ(g.weight(i, j), g.weight(j, i));
}

TEST(RelationGraph, MatchesBruteForceOracle) {
  std::mt19937_64 rng(81);
  for (int round = 0; round < 40; ++round) {
    const std::uint32_t nc = 2 + rng() % 30, nr = 1 + rng() % 15;
    const auto rs = random_log(rng, 1 + rng() % 300, nc, nr);
    std::vector<double> w(nr);
    for (auto& x : w) x = (rng() % 4 == 0) ? 0.0 : static_cast<double>(rng() % 100) / 37.0;
    expect_graph_equals(build_relation_graph(rs, w, labels_for(nc), GraphMode::Transition),
                        oracle::brute_transition(rs, w));
    expect_graph_equals(build_relation_graph(rs, w, labels_for(nc), GraphMode::CoAccess),
                        oracle::brute_coaccess(rs, w));
  }
}

TEST(JournalAggregation, SumsAcrossJournals) {
  RelationGraph g(labels_for(4), {{0, 2, 2.0}, {1, 2, 3.0}, {0, 1, 7.0}, {3, 0, 1.5}}, true);
  const std::vector<std::optional<std::string>> key{"A", "A", "B", std::nullopt};
  const std::vector<std::optional<std::string>> title{"Journal A", "Journal A", "Journal B", std::nullopt};
  const auto j = aggregate_to_journals(g, key, title);
  ASSERT_EQ(j.graph.node_count(), 2u);
  EXPECT_EQ(j.graph.label(0), "A");
  EXPECT_EQ(j.titles[1], "Journal B");
  EXPECT_DOUBLE_EQ(j.graph.weight(0, 1), 5.0);
  EXPECT_DOUBLE_EQ(j.intra_journal_weight, 7.0);
  EXPECT_DOUBLE_EQ(j.unassigned_weight, 1.5);
  EXPECT_EQ(j.unassigned_clusters, 1u);
  EXPECT_DOUBLE_EQ(j.article_weight, 13.5);
}

TEST(JournalAggregation, MatchesOracleAndConservesWeight) {
  std::mt19937_64 rng(82);
  for (int round = 0; round < 40; ++round) {
    const std::uint32_t n = 2 + rng() % 40;
    const bool directed = rng() % 2;
    std::vector<RelationGraph::Edge> edges;
    for (int e = 0; e < 150; ++e)
      edges.push_back({static_cast<std::uint32_t>(rng() % n), static_cast<std::uint32_t>(rng() % n),
                       static_cast<double>(1 + rng() % 9)});
    RelationGraph g(labels_for(n), edges, directed);
    std::vector<std::optional<std::string>> key(n), title(n);
    for (std::uint32_t i = 0; i < n; ++i)
      if (rng() % 6) key[i] = "j" + std::to_string(rng() % 8), title[i] = "T" + *key[i];
    const auto j = aggregate_to_journals(g, key, title);
    const auto want = oracle::brute_journal_sum(g, key);
    std::size_t count = 0;
    for (const auto& e : j.graph.edges()) {
      ++count;
      EXPECT_DOUBLE_EQ(e.weight, want.at({j.graph.label(e.src), j.graph.label(e.dst)}));
    }
    EXPECT_EQ(count, want.size());
    EXPECT_DOUBLE_EQ(j.article_weight, g.total_weight());
    EXPECT_DOUBLE_EQ(j.graph.total_weight() + j.intra_journal_weight + j.unassigned_weight, j.article_weight);
  }
}

TEST(RelationGraph, FileRoundTrip) {
  testing_support::TempDir dir;
  std::mt19937_64 rng(83);
  for (bool directed : {true, false}) {
    std::vector<std::string> labels{"plain", "tab\there", "new\nline", "back\\slash", "中文"};
    std::vector<RelationGraph::Edge> edges;
    for (int e = 0; e < 20; ++e)
      edges.push_back({static_cast<std::uint32_t>(rng() % 5), static_cast<std::uint32_t>(rng() % 5),
                       std::ldexp(static_cast<double>(rng() % 1000 + 1), -7) + 1.0 / 3.0});
    RelationGraph g(labels, edges, directed);
    write_graph(g, dir / "e.tsv", dir / "n.tsv");
    const auto r = read_graph(dir / "e.tsv", dir / "n.tsv");
    EXPECT_EQ(r.directed(), directed);
    EXPECT_EQ(r.labels(), labels);
    const auto a = g.edges(), b = r.edges();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].src, b[i].src);
      EXPECT_EQ(a[i].dst, b[i].dst);
      EXPECT_EQ(a[i].weight, b[i].weight);
    }
  }
}

TEST(RelationGraph, FormatDoubleRoundTrips) {
  std::mt19937_64 rng(84);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double v = u(rng);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(3.0), "3");
}
