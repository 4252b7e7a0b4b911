#include <gtest/gtest.h>

#include <random>

#include "usagelog/error.hpp"
#include "usagelog/resumption_token.hpp"

using namespace usagelog;

namespace {

const std::string kKey = "0123456789abcdef0123456789abcdef";

ResumptionToken random_state(std::mt19937_64& rng) {
  ResumptionToken t;
  t.verb = rng() % 2 ? "ListRecords" : "ListIdentifiers";
  t.metadata_prefix = "resolver_logs";
  for (int i = 0, n = static_cast<int>(rng() % 30); i < n; ++i) t.cursor += static_cast<char>(32 + rng() % 95);
  const auto base = static_cast<std::int64_t>(1'000'000'000 + rng() % 500'000'000);
  if (rng() % 2) t.from = UtcTime(std::chrono::seconds(base - 1000));
  if (rng() % 2) t.until = UtcTime(std::chrono::seconds(base + 1000));
  t.issued_at = UtcTime(std::chrono::seconds(base));
  t.expiry = t.issued_at + std::chrono::hours(1);
  t.complete_list_size = rng() % 100000;
  t.position = rng() % 100000;
  return t;
}

ErrorCode decode_error(const std::string& text, UtcTime now) {
  try {
    decode_resumption_token(text, kKey, now);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidEntity;
}

}  // namespace

TEST(ResumptionToken, RandomRoundTrip) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 2000; ++i) {
    const auto s = random_state(rng);
    const auto text = encode_resumption_token(s, kKey);
    for (char c : text) ASSERT_TRUE(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.');
    EXPECT_EQ(decode_resumption_token(text, kKey, s.issued_at), s);
  }
}

TEST(ResumptionToken, EveryFlippedCharacterFails) {
  std::mt19937_64 rng(22);
  const auto s = random_state(rng);
  const auto text = encode_resumption_token(s, kKey);
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto bad = text;
    bad[i] = bad[i] == 'A' ? 'B' : 'A';
    if (bad == text) continue;
    EXPECT_EQ(decode_error(bad, s.issued_at), ErrorCode::BadResumptionToken) << i;
  }
}

TEST(ResumptionToken, ExpiredFails) {
  std::mt19937_64 rng(23);
  const auto s = random_state(rng);
  const auto text = encode_resumption_token(s, kKey);
  EXPECT_NO_THROW(decode_resumption_token(text, kKey, s.expiry));
  EXPECT_EQ(decode_error(text, s.expiry + std::chrono::seconds(1)), ErrorCode::BadResumptionToken);
}

TEST(ResumptionToken, WrongKeyAndGarbageFail) {
  std::mt19937_64 rng(24);
  const auto s = random_state(rng);
  EXPECT_THROW(decode_resumption_token(encode_resumption_token(s, "other key"), kKey, s.issued_at), Error);
  for (const char* junk : {"", ".", "abc", "a.b", "!!!.???"}) EXPECT_EQ(decode_error(junk, s.issued_at), ErrorCode::BadResumptionToken);
}
