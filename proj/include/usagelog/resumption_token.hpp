#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "usagelog/time.hpp"

namespace usagelog {

/// Everything needed to continue a ListRecords/ListIdentifiers sequence. The
/// token is stateless: the server keeps nothing between requests.
struct ResumptionToken {
  std::string verb;
  std::string metadata_prefix;
  std::string cursor;  // opaque event-store cursor
  std::optional<UtcTime> from;
  std::optional<UtcTime> until;
  UtcTime issued_at;
  UtcTime expiry;
  std::size_t complete_list_size = 0;
  std::size_t position = 0;  // records delivered before the page this token fetches

  friend bool operator==(const ResumptionToken&, const ResumptionToken&) = default;
};

/// `base64url(payload) "." base64url(HMAC-SHA256(key, payload)[0..16))`.
std::string encode_resumption_token(const ResumptionToken& state, std::string_view key);

/// Throws Error(BadResumptionToken) when the text is unparsable, the MAC does
/// not verify, or `now` is past expiry.
ResumptionToken decode_resumption_token(std::string_view text, std::string_view key, UtcTime now);

}  // namespace usagelog
