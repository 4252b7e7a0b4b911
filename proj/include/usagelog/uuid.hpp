#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace usagelog {

struct Uuid {
  std::array<std::uint8_t, 16> bytes{};

  friend auto operator<=>(const Uuid&, const Uuid&) = default;

  /// Canonical `urn:UUID:xxxxxxxx-xxxx-xxxx-xxxx-xxxxxxxxxxxx`, lowercase hex.
  std::string urn() const;
  /// Bare 36-character form.
  std::string str() const;

  static std::optional<Uuid> from_string(std::string_view text);
  /// Accepts `urn:uuid:` in any case.
  static std::optional<Uuid> from_urn(std::string_view text);
};

struct UuidHash {
  std::size_t operator()(const Uuid& u) const noexcept;
};

using IdSource = std::function<Uuid()>;

/// Random (version 4) UUIDs from a non-deterministic seed.
IdSource random_id_source();
/// Version 4 UUIDs from a 64-bit seed; reproducible.
IdSource seeded_id_source(std::uint64_t seed);

Uuid uuid_v4_from(std::uint64_t hi, std::uint64_t lo);

}  // namespace usagelog
