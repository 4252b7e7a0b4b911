#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "usagelog/model.hpp"

namespace usagelog {

struct KevResult {
  ReferentMetadata metadata;
  std::vector<std::string> identifiers;  // URIs, e.g. info:doi/...
  std::optional<std::string> referrer_sid;  // info:sid/...
  std::size_t unknown_keys = 0;
  std::vector<std::string> warnings;
};

/// Decodes `%XX` escapes; `+` becomes a space when requested. Throws
/// UnbalancedEncoding on a truncated or non-hex escape.
std::string percent_decode(std::string_view text, bool plus_as_space = true);
/// Encodes everything outside the URI unreserved set.
std::string percent_encode(std::string_view text);

/// OpenURL 0.1 key/encoded-value query. Pairs are split on `&` and `=`
/// before decoding, so escaped delimiters inside values survive. Repeated
/// keys keep the first value and add a warning. Throws EmptyQuery or
/// UnbalancedEncoding.
KevResult parse_kev_openurl(std::string_view query);

/// Inverse of parse_kev_openurl in a fixed key order:
/// genre atitle title issn volume issue spage epage date id... sid.
std::string format_kev_openurl(const KevResult& kev);

}  // namespace usagelog
