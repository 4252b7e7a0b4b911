#include "usagelog/model.hpp"

#include <cctype>

#include "usagelog/error.hpp"

namespace usagelog {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidEntity: return "InvalidEntity";
    case ErrorCode::XmlMalformed: return "XmlMalformed";
    case ErrorCode::MissingIdentifierAttribute: return "MissingIdentifierAttribute";
    case ErrorCode::BadTimestamp: return "BadTimestamp";
    case ErrorCode::DuplicateEventId: return "DuplicateEventId";
    case ErrorCode::StorageFailure: return "StorageFailure";
    case ErrorCode::BadCursor: return "BadCursor";
    case ErrorCode::BadResumptionToken: return "badResumptionToken";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::UnbalancedEncoding: return "UnbalancedEncoding";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::TooFewRequesters: return "TooFewRequesters";
    case ErrorCode::EmptyKey: return "EmptyKey";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::FileUnreadable: return "FileUnreadable";
    case ErrorCode::BadNumber: return "BadNumber";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::AmbiguousQuery: return "AmbiguousQuery";
    case ErrorCode::NotInGraph: return "NotInGraph";
    case ErrorCode::ArtifactsMissing: return "ArtifactsMissing";
  }
  return "Unknown";
}

namespace {

// XML 1.0 Char production over well-formed UTF-8.
bool xml_representable(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::uint32_t cp;
    std::size_t len;
    if (c < 0x80) {
      cp = c;
      len = 1;
    } else if ((c & 0xE0) == 0xC0) {
      cp = c & 0x1F;
      len = 2;
    } else if ((c & 0xF0) == 0xE0) {
      cp = c & 0x0F;
      len = 3;
    } else if ((c & 0xF8) == 0xF0) {
      cp = c & 0x07;
      len = 4;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = cp << 6 | (cc & 0x3F);
    }
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000))
      return false;
    const bool ok = cp == 0x9 || cp == 0xA || cp == 0xD || (cp >= 0x20 && cp <= 0xD7FF) ||
                    (cp >= 0xE000 && cp <= 0xFFFD) || (cp >= 0x10000 && cp <= 0x10FFFF);
    if (!ok) return false;
    i += len;
  }
  return true;
}

void check_text(const std::optional<std::string>& v, const char* what) {
  if (v && !xml_representable(*v))
    throw Error(ErrorCode::InvalidEntity, std::string(what) + " is not valid XML character data");
}

}  // namespace

bool ReferentMetadata::empty() const {
  return !genre && !atitle && !jtitle && !issn && !volume && !issue && !spage && !epage && !date &&
         !doi;
}

bool EntityDescriptor::empty() const {
  return identifiers.empty() && (!metadata || metadata->empty()) && !private_data;
}

bool is_valid_issn(std::string_view s) {
  if (s.size() != 9 || s[4] != '-') return false;
  for (int i = 0; i < 9; ++i) {
    if (i == 4) continue;
    const bool last = i == 8;
    if (!(std::isdigit(static_cast<unsigned char>(s[i])) || (last && s[i] == 'X'))) return false;
  }
  return true;
}

void validate_referent_metadata(const ReferentMetadata& m) {
  if (m.issn && !is_valid_issn(*m.issn))
    throw Error(ErrorCode::InvalidEntity, "issn '" + *m.issn + "' does not match NNNN-NNNC");
  if (m.date) {
    const auto& d = *m.date;
    if (d.size() < 4 || !std::isdigit(static_cast<unsigned char>(d[0])) ||
        !std::isdigit(static_cast<unsigned char>(d[1])) ||
        !std::isdigit(static_cast<unsigned char>(d[2])) ||
        !std::isdigit(static_cast<unsigned char>(d[3])))
      throw Error(ErrorCode::InvalidEntity, "date '" + d + "' does not start with a 4-digit year");
  }
  check_text(m.genre, "genre");
  check_text(m.atitle, "atitle");
  check_text(m.jtitle, "jtitle");
  check_text(m.volume, "volume");
  check_text(m.issue, "issue");
  check_text(m.spage, "spage");
  check_text(m.epage, "epage");
  check_text(m.doi, "doi");
}

void validate_entity(const EntityDescriptor& e, const char* role) {
  for (const auto& id : e.identifiers) {
    if (id.empty()) throw Error(ErrorCode::InvalidEntity, std::string(role) + ": empty identifier");
    for (unsigned char c : id)
      if (std::isspace(c))
        throw Error(ErrorCode::InvalidEntity,
                    std::string(role) + ": identifier '" + id + "' contains whitespace");
    if (!xml_representable(id))
      throw Error(ErrorCode::InvalidEntity, std::string(role) + ": identifier is not valid UTF-8");
  }
  if (e.metadata) validate_referent_metadata(*e.metadata);
  check_text(e.private_data, "private data");
}

void validate_event(const UsageEvent& e) {
  if (e.referent.identifiers.empty() && (!e.referent.metadata || e.referent.metadata->empty()))
    throw Error(ErrorCode::InvalidEntity, "referent has neither identifier nor metadata");
  validate_entity(e.referent, "referent");
  if (e.referring_entity) validate_entity(*e.referring_entity, "referring-entity");
  validate_entity(e.requester, "requester");
  validate_entity(e.resolver, "resolver");
  validate_entity(e.referrer, "referrer");
  for (const auto& o : e.service_type.other)
    if (o.empty() || !xml_representable(o))
      throw Error(ErrorCode::InvalidEntity, "service type 'other' value is empty or not XML text");
}

UsageEvent create_event(EntityDescriptor referent, EntityDescriptor requester,
                        ServiceTypeFlags service_type, EntityDescriptor resolver,
                        EntityDescriptor referrer, std::optional<EntityDescriptor> referring_entity,
                        const Clock& clock, const IdSource& id_source) {
  UsageEvent e;
  e.referent = std::move(referent);
  e.requester = std::move(requester);
  e.service_type = std::move(service_type);
  e.resolver = std::move(resolver);
  e.referrer = std::move(referrer);
  e.referring_entity = std::move(referring_entity);
  validate_event(e);
  e.event_timestamp = clock();
  e.event_id = id_source();
  return e;
}

EntityDescriptor identified_by(std::string identifier) {
  EntityDescriptor d;
  d.identifiers.push_back(std::move(identifier));
  return d;
}

}  // namespace usagelog
