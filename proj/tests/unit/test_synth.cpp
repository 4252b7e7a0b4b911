#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "usagelog/context_object.hpp"
#include "usagelog/dedup.hpp"
#include "usagelog/error.hpp"
#include "usagelog/requesters.hpp"
#include "usagelog/sessions.hpp"
#include "usagelog/synth.hpp"

using namespace usagelog;

namespace {

SynthConfig small(std::size_t events = 10'000) {
  SynthConfig c;
  c.n_events = events;
  c.n_requesters = 2000;
  c.n_referents = 5000;
  c.n_journals = 200;
  return c;
}

std::string stream_digest(const SynthConfig& c) {
  std::string all;
  generate_synthetic(c, [&](const UsageEvent& e) { all += serialize_context_object(e); });
  return std::to_string(std::hash<std::string>{}(all)) + ":" +
         std::to_string(all.size());
}

}  // namespace

TEST(Synth, DeterministicStream) {
  const auto c = small();
  std::vector<std::string> a, b;
  generate_synthetic(c, [&](const UsageEvent& e) { a.push_back(serialize_context_object(e)); });
  generate_synthetic(c, [&](const UsageEvent& e) { b.push_back(serialize_context_object(e)); });
  EXPECT_EQ(a, b);
  auto other = c;
  other.seed = 43;
  EXPECT_NE(stream_digest(c), stream_digest(other));
}

TEST(Synth, EventsValidAndOrdered) {
  const auto events = generate_events(small(5000));
  ASSERT_EQ(events.size(), 5000u);
  std::set<Uuid> ids;
  for (std::size_t i = 0; i < events.size(); ++i) {
    EXPECT_NO_THROW(validate_event(events[i]));
    EXPECT_TRUE(ids.insert(events[i].event_id).second);
    if (i) EXPECT_LE(events[i - 1].event_timestamp, events[i].event_timestamp);
  }
}

TEST(Synth, GroundTruthCoversEveryEvent) {
  GroundTruth truth;
  const auto c = small();
  const auto events = generate_events(c, &truth);
  std::set<std::string> instances;
  for (const auto& e : events) {
    const auto key = referent_instance_key(e.referent);
    instances.insert(key);
    EXPECT_TRUE(truth.true_clusters.count(key));
    EXPECT_TRUE(truth.true_sessions.count(e.event_id));
  }
  EXPECT_EQ(truth.true_clusters.size(), instances.size());
  EXPECT_EQ(truth.true_heavy_hitters.size(), c.n_heavy_hitters);
}

TEST(Synth, SessionsMatchSessionizer) {
  GroundTruth truth;
  const auto c = small();
  const auto events = generate_events(c, &truth);
  const auto got = sessionize(events, c.session_gap_minutes);
  ASSERT_EQ(got.size(), truth.true_sessions.size());
  for (const auto& [id, s] : truth.true_sessions) EXPECT_EQ(got.at(id), s);
}

TEST(Synth, ZeroVariantRateIsIdentityPartition) {
  auto c = small();
  c.duplicate_variant_rate = 0.0;
  GroundTruth truth;
  generate_events(c, &truth);
  std::set<std::uint32_t> works;
  for (const auto& [k, w] : truth.true_clusters) EXPECT_TRUE(works.insert(w).second);
  const auto cat = generate_catalog(c);
  for (const auto& members : cat.work_instances) EXPECT_LE(members.size(), 1u);
}

TEST(Synth, VariantsMergeUnderDedupRules) {
  auto c = small();
  c.duplicate_variant_rate = 0.3;
  const auto cat = generate_catalog(c);
  const auto a = cluster_referents(cat.instances);
  std::size_t variants = 0;
  for (const auto& members : cat.work_instances) {
    if (members.size() < 2) continue;
    variants += members.size() - 1;
    for (auto m : members) EXPECT_EQ(a.instance_cluster[m], a.instance_cluster[members[0]]);
  }
  EXPECT_GT(variants, 500u);
}

TEST(Synth, HeavyHittersAreTopRequesters) {
  auto c = small(20'000);
  c.heavy_hitter_multiplier = 100;
  GroundTruth truth;
  const auto events = generate_events(c, &truth);
  const auto hist = requester_histogram(events);
  std::vector<std::pair<std::size_t, std::string>> ranked;
  for (const auto& [r, n] : hist) ranked.emplace_back(n, r);
  std::sort(ranked.rbegin(), ranked.rend());
  std::set<std::string> top;
  for (std::size_t i = 0; i < 3; ++i) top.insert(ranked[i].second);
  EXPECT_EQ(top, truth.true_heavy_hitters);
}

TEST(Synth, ResidualFrequencyLawAtScale) {
  SynthConfig c;  // defaults: 10^5 events
  GroundTruth truth;
  const auto events = generate_events(c, &truth);
  auto hist = requester_histogram(events);
  for (const auto& h : truth.true_heavy_hitters) hist.erase(h);
  std::vector<std::size_t> counts;
  for (const auto& [r, n] : hist) counts.push_back(n);
  std::sort(counts.rbegin(), counts.rend());
  EXPECT_GE(fit_tail(counts, 0).r2, 0.95);
}

TEST(Synth, InvalidConfig) {
  auto c = small();
  c.n_journals = c.n_referents + 1;
  EXPECT_THROW(c.validate(), Error);
  c = small();
  c.duplicate_variant_rate = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c = small();
  c.heavy_hitter_multiplier = 0.5;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Synth, ImpactFactorsPerJournal) {
  const auto c = small();
  const auto impact = synthetic_impact_factors(c);
  EXPECT_EQ(impact.size(), c.n_journals);
  for (const auto& [issn, v] : impact) {
    EXPECT_TRUE(is_valid_issn(issn)) << issn;
    EXPECT_GT(v, 0.0);
  }
}
