#include "usagelog/resumption_token.hpp"

#include <charconv>
#include <vector>

#include "usagelog/crypto.hpp"
#include "usagelog/error.hpp"

namespace usagelog {
namespace {

constexpr std::size_t kMacBytes = 16;

std::string opt_time(const std::optional<UtcTime>& t) {
  return t ? std::to_string(t->time_since_epoch().count()) : std::string("-");
}

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorCode::BadResumptionToken, why); }

long long to_ll(std::string_view s) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) bad("corrupt numeric field");
  return v;
}

std::optional<UtcTime> to_opt_time(std::string_view s) {
  if (s == "-") return std::nullopt;
  return UtcTime{std::chrono::seconds(to_ll(s))};
}

std::string mac(std::string_view key, std::string_view payload) {
  const auto d = crypto::hmac_sha256(key, payload);
  return std::string(reinterpret_cast<const char*>(d.data()), kMacBytes);
}

}  // namespace

std::string encode_resumption_token(const ResumptionToken& s, std::string_view key) {
  // The cursor is last so it may contain any byte, including '|'.
  std::string payload = "v1|" + s.verb + "|" + s.metadata_prefix + "|" + opt_time(s.from) + "|" +
                        opt_time(s.until) + "|" + std::to_string(s.issued_at.time_since_epoch().count()) +
                        "|" + std::to_string(s.expiry.time_since_epoch().count()) + "|" +
                        std::to_string(s.complete_list_size) + "|" + std::to_string(s.position) + "|" +
                        s.cursor;
  return crypto::base64url_encode(payload) + "." + crypto::base64url_encode(mac(key, payload));
}

ResumptionToken decode_resumption_token(std::string_view text, std::string_view key, UtcTime now) {
  const auto dot = text.find('.');
  if (dot == std::string_view::npos) bad("token has no signature");
  const auto payload = crypto::base64url_decode(text.substr(0, dot));
  const auto sig = crypto::base64url_decode(text.substr(dot + 1));
  if (!payload || !sig) bad("token is not base64url");
  if (!crypto::constant_time_equal(*sig, mac(key, *payload))) bad("token signature mismatch");

  std::vector<std::string_view> f;
  std::string_view rest(*payload);
  while (f.size() < 9) {
    const auto bar = rest.find('|');
    if (bar == std::string_view::npos) break;
    f.push_back(rest.substr(0, bar));
    rest.remove_prefix(bar + 1);
  }
  f.push_back(rest);
  if (f.size() != 10 || f[0] != "v1") bad("unsupported token layout");
  ResumptionToken s;
  s.verb = f[1];
  s.metadata_prefix = f[2];
  s.from = to_opt_time(f[3]);
  s.until = to_opt_time(f[4]);
  s.issued_at = UtcTime{std::chrono::seconds(to_ll(f[5]))};
  s.expiry = UtcTime{std::chrono::seconds(to_ll(f[6]))};
  s.complete_list_size = static_cast<std::size_t>(to_ll(f[7]));
  s.position = static_cast<std::size_t>(to_ll(f[8]));
  s.cursor = f[9];
  if (now > s.expiry) bad("token expired at " + format_utc(s.expiry));
  return s;
}

}  // namespace usagelog
