#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace usagelog::crypto {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::string_view data);
Digest hmac_sha256(std::string_view key, std::string_view message);

std::string hex(const std::uint8_t* data, std::size_t n);
inline std::string hex(const Digest& d) { return hex(d.data(), d.size()); }

/// RFC 4648 base64url without padding.
std::string base64url_encode(std::string_view data);
std::optional<std::string> base64url_decode(std::string_view text);

bool constant_time_equal(std::string_view a, std::string_view b);

/// 32 random bytes from the OS CSPRNG.
std::string random_key();

}  // namespace usagelog::crypto
