#include <gtest/gtest.h>

#include <random>

#include <regex>
#include <unordered_set>

#include "usagelog/time.hpp"
#include "usagelog/uuid.hpp"

using namespace usagelog;

TEST(Time, FormatsAndParsesUtc) {
  const auto t = parse_utc("2005-11-11T17:45:08Z");
  ASSERT_TRUE(t);
  EXPECT_EQ(format_utc(*t), "2005-11-11T17:45:08Z");
  EXPECT_EQ(format_day(*t), "2005-11-11");
  EXPECT_EQ(format_datestamp(*t, Granularity::Day), "2005-11-11");
  EXPECT_EQ(format_datestamp(*t, Granularity::Seconds), "2005-11-11T17:45:08Z");
}

TEST(Time, RejectsNearMisses) {
  for (const char* bad : {"2005-11-11T17:45:08", "2005-11-11 17:45:08Z", "2005-13-01T00:00:00Z",
                          "2005-02-30T00:00:00Z", "2005-11-11T24:00:00Z", "05-11-11T17:45:08Z",
                          "2005-11-11T17:45:08.5Z", "", "2005-11-11T17:45:08Z "})
    EXPECT_FALSE(parse_utc(bad)) << bad;
}

TEST(Time, DatestampGranularity) {
  const auto d = parse_datestamp("2005-11-12");
  ASSERT_TRUE(d);
  EXPECT_EQ(d->granularity, Granularity::Day);
  EXPECT_EQ(format_utc(d->time), "2005-11-12T00:00:00Z");
  EXPECT_EQ(format_utc(day_ceil(d->time)), "2005-11-12T23:59:59Z");
  const auto s = parse_datestamp("2005-11-12T21:21:51Z");
  ASSERT_TRUE(s);
  EXPECT_EQ(s->granularity, Granularity::Seconds);
  EXPECT_EQ(format_utc(day_floor(s->time)), "2005-11-12T00:00:00Z");
  EXPECT_FALSE(parse_datestamp("2005-11"));
}

TEST(Time, RandomRoundTripMatchesPattern) {
  const std::regex pattern(R"(^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z$)");
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const UtcTime t{std::chrono::seconds(static_cast<std::int64_t>(rng() % 4'000'000'000ull))};
    const auto text = format_utc(t);
    EXPECT_TRUE(std::regex_match(text, pattern)) << text;
    EXPECT_EQ(parse_utc(text), t);
  }
}

TEST(Time, SteppingClock) {
  const auto start = *parse_utc("2020-01-01T00:00:00Z");
  auto clock = stepping_clock(start, std::chrono::seconds(2));
  EXPECT_EQ(clock(), start);
  EXPECT_EQ(clock(), start + std::chrono::seconds(2));
}

TEST(Uuid, UrnRoundTrip) {
  const auto u = Uuid::from_urn("urn:UUID:58f202ac-22cf-11d1-b12d-002035b29062");
  ASSERT_TRUE(u);
  EXPECT_EQ(u->urn(), "urn:UUID:58f202ac-22cf-11d1-b12d-002035b29062");
  EXPECT_EQ(u->str(), "58f202ac-22cf-11d1-b12d-002035b29062");
  EXPECT_EQ(Uuid::from_urn("URN:uuid:58F202AC-22CF-11D1-B12D-002035B29062"), u);
  EXPECT_EQ(Uuid::from_string(u->str()), u);
}

TEST(Uuid, RejectsMalformed) {
  for (const char* bad : {"", "urn:UUID:58f202ac22cf-11d1-b12d-002035b29062",
                          "urn:UUID:58f202ac-22cf-11d1-b12d-002035b2906", "urn:UUID:58f202ac-22cf-11d1-b12d-002035b2906g",
                          "58f202ac-22cf-11d1-b12d-002035b29062", "urn:isbn:58f202ac-22cf-11d1-b12d-002035b29062"})
    EXPECT_FALSE(Uuid::from_urn(bad)) << bad;
}

TEST(Uuid, SeededSourceIsReproducibleAndVersion4) {
  auto a = seeded_id_source(9), b = seeded_id_source(9), c = seeded_id_source(10);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_EQ(x.bytes[6] >> 4, 4);
  EXPECT_EQ(x.bytes[8] >> 6, 2);
}

TEST(Uuid, MillionDrawsAreDistinct) {
  auto ids = random_id_source();
  std::unordered_set<Uuid, UuidHash> seen;
  seen.reserve(1'000'000);
  for (int i = 0; i < 1'000'000; ++i) ASSERT_TRUE(seen.insert(ids()).second);
}
