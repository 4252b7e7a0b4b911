#include "usagelog/uuid.hpp"

#include <cctype>
#include <memory>
#include <mutex>
#include <random>

namespace usagelog {
namespace {

constexpr char kHex[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string Uuid::str() const {
  std::string out;
  out.reserve(36);
  for (std::size_t i = 0; i < 16; ++i) {
    if (i == 4 || i == 6 || i == 8 || i == 10) out.push_back('-');
    out.push_back(kHex[bytes[i] >> 4]);
    out.push_back(kHex[bytes[i] & 0xF]);
  }
  return out;
}

std::string Uuid::urn() const { return "urn:UUID:" + str(); }

std::optional<Uuid> Uuid::from_string(std::string_view s) {
  if (s.size() != 36) return std::nullopt;
  Uuid u;
  std::size_t b = 0;
  for (std::size_t i = 0; i < 36;) {
    if (i == 8 || i == 13 || i == 18 || i == 23) {
      if (s[i] != '-') return std::nullopt;
      ++i;
      continue;
    }
    const int hi = hex_value(s[i]);
    const int lo = hex_value(s[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    u.bytes[b++] = static_cast<std::uint8_t>(hi << 4 | lo);
    i += 2;
  }
  return u;
}

std::optional<Uuid> Uuid::from_urn(std::string_view s) {
  constexpr std::string_view prefix = "urn:uuid:";
  if (s.size() < prefix.size()) return std::nullopt;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return std::nullopt;
  return from_string(s.substr(prefix.size()));
}

std::size_t UuidHash::operator()(const Uuid& u) const noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (auto b : u.bytes) h = (h ^ b) * 1099511628211ULL;
  return static_cast<std::size_t>(h);
}

Uuid uuid_v4_from(std::uint64_t hi, std::uint64_t lo) {
  Uuid u;
  for (int i = 0; i < 8; ++i) {
    u.bytes[i] = static_cast<std::uint8_t>(hi >> (56 - 8 * i));
    u.bytes[8 + i] = static_cast<std::uint8_t>(lo >> (56 - 8 * i));
  }
  u.bytes[6] = static_cast<std::uint8_t>((u.bytes[6] & 0x0F) | 0x40);
  u.bytes[8] = static_cast<std::uint8_t>((u.bytes[8] & 0x3F) | 0x80);
  return u;
}

IdSource seeded_id_source(std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  auto mu = std::make_shared<std::mutex>();
  return [rng, mu] {
    std::lock_guard lock(*mu);
    const auto hi = (*rng)();
    const auto lo = (*rng)();
    return uuid_v4_from(hi, lo);
  };
}

IdSource random_id_source() {
  std::random_device rd;
  const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  return seeded_id_source(seed);
}

}  // namespace usagelog
