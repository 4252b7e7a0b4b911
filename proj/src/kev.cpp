#include "usagelog/kev.hpp"

#include <array>
#include <map>

#include "usagelog/error.hpp"

namespace usagelog {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

struct IdScheme {
  std::string_view kev_prefix;
  std::string_view uri_prefix;
};

constexpr std::array<IdScheme, 4> kIdSchemes{{
    {"doi:", "info:doi/"},
    {"pmid:", "info:pmid/"},
    {"oclcnum:", "info:oclcnum/"},
    {"bibcode:", "info:bibcode/"},
}};

std::string id_to_uri(const std::string& value) {
  for (const auto& s : kIdSchemes)
    if (value.rfind(s.kev_prefix, 0) == 0)
      return std::string(s.uri_prefix) + value.substr(s.kev_prefix.size());
  return value;
}

std::string uri_to_id(const std::string& uri) {
  for (const auto& s : kIdSchemes)
    if (uri.rfind(s.uri_prefix, 0) == 0)
      return std::string(s.kev_prefix) + uri.substr(s.uri_prefix.size());
  return uri;
}

constexpr std::string_view kSidPrefix = "info:sid/";

}  // namespace

std::string percent_decode(std::string_view text, bool plus_as_space) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '%') {
      const int hi = i + 1 < text.size() ? hex_value(text[i + 1]) : -1;
      const int lo = i + 2 < text.size() ? hex_value(text[i + 2]) : -1;
      if (hi < 0 || lo < 0)
        throw Error(ErrorCode::UnbalancedEncoding,
                    "invalid percent escape at offset " + std::to_string(i));
      out += static_cast<char>(hi * 16 + lo);
      i += 2;
    } else if (c == '+' && plus_as_space) {
      out += ' ';
    } else {
      out += c;
    }
  }
  return out;
}

std::string percent_encode(std::string_view text) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(text.size());
  for (unsigned char c : text) {
    const bool unreserved = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                            (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_' || c == '~';
    if (unreserved) {
      out += static_cast<char>(c);
    } else if (c == ' ') {
      out += '+';
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 15];
    }
  }
  return out;
}

KevResult parse_kev_openurl(std::string_view query) {
  if (query.empty()) throw Error(ErrorCode::EmptyQuery, "empty OpenURL query");
  KevResult r;
  std::map<std::string, bool> seen;
  std::size_t pos = 0;
  bool any = false;
  while (pos <= query.size()) {
    auto amp = query.find('&', pos);
    if (amp == std::string_view::npos) amp = query.size();
    const auto pair = query.substr(pos, amp - pos);
    pos = amp + 1;
    if (pair.empty()) continue;
    any = true;
    const auto eq = pair.find('=');
    const std::string key = percent_decode(pair.substr(0, eq));
    const std::string value =
        eq == std::string_view::npos ? std::string() : percent_decode(pair.substr(eq + 1));

    std::optional<std::string>* slot = nullptr;
    auto& m = r.metadata;
    if (key == "genre") slot = &m.genre;
    else if (key == "atitle") slot = &m.atitle;
    else if (key == "title" || key == "jtitle") slot = &m.jtitle;
    else if (key == "issn") slot = &m.issn;
    else if (key == "volume") slot = &m.volume;
    else if (key == "issue") slot = &m.issue;
    else if (key == "spage") slot = &m.spage;
    else if (key == "epage") slot = &m.epage;
    else if (key == "date") slot = &m.date;

    if (slot) {
      if (slot->has_value() || seen.count(key)) {
        r.warnings.push_back("repeated key '" + key + "' ignored");
        continue;
      }
      seen[key] = true;
      if (!value.empty()) *slot = value;
    } else if (key == "id") {
      if (!value.empty()) r.identifiers.push_back(id_to_uri(value));
    } else if (key == "sid") {
      if (r.referrer_sid) {
        r.warnings.push_back("repeated key 'sid' ignored");
        continue;
      }
      if (!value.empty()) r.referrer_sid = std::string(kSidPrefix) + value;
    } else {
      ++r.unknown_keys;
    }
  }
  if (!any) throw Error(ErrorCode::EmptyQuery, "OpenURL query has no key/value pairs");
  return r;
}

std::string format_kev_openurl(const KevResult& kev) {
  std::string out;
  auto put = [&out](std::string_view key, const std::string& value) {
    if (!out.empty()) out += '&';
    out += key;
    out += '=';
    out += percent_encode(value);
  };
  const auto& m = kev.metadata;
  const std::pair<std::string_view, const std::optional<std::string>*> fields[] = {
      {"genre", &m.genre}, {"atitle", &m.atitle}, {"title", &m.jtitle},
      {"issn", &m.issn},   {"volume", &m.volume}, {"issue", &m.issue},
      {"spage", &m.spage}, {"epage", &m.epage},   {"date", &m.date},
  };
  for (const auto& [key, value] : fields)
    if (*value) put(key, **value);
  for (const auto& id : kev.identifiers) put("id", uri_to_id(id));
  if (kev.referrer_sid) {
    const auto& sid = *kev.referrer_sid;
    put("sid", sid.rfind(kSidPrefix, 0) == 0 ? sid.substr(kSidPrefix.size()) : sid);
  }
  return out;
}

}  // namespace usagelog
