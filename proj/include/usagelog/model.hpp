#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "usagelog/time.hpp"
#include "usagelog/uuid.hpp"

namespace usagelog {

/// Journal-format descriptive metadata for a referent. All fields optional.
struct ReferentMetadata {
  std::optional<std::string> genre;
  std::optional<std::string> atitle;
  std::optional<std::string> jtitle;
  std::optional<std::string> issn;
  std::optional<std::string> volume;
  std::optional<std::string> issue;
  std::optional<std::string> spage;
  std::optional<std::string> epage;
  std::optional<std::string> date;  // year or ISO date
  std::optional<std::string> doi;

  bool empty() const;
  friend bool operator==(const ReferentMetadata&, const ReferentMetadata&) = default;
};

struct EntityDescriptor {
  std::vector<std::string> identifiers;
  std::optional<ReferentMetadata> metadata;  // referent only
  std::optional<std::string> private_data;

  bool empty() const;
  friend bool operator==(const EntityDescriptor&, const EntityDescriptor&) = default;
};

enum class ServiceKind { FullText, Abstract, Citation, Holding };

struct ServiceTypeFlags {
  std::set<ServiceKind> kinds;
  std::set<std::string> other;

  bool empty() const { return kinds.empty() && other.empty(); }
  friend bool operator==(const ServiceTypeFlags&, const ServiceTypeFlags&) = default;

  static ServiceTypeFlags of(ServiceKind k) { return ServiceTypeFlags{{k}, {}}; }
};

struct UsageEvent {
  Uuid event_id;
  UtcTime event_timestamp;
  EntityDescriptor referent;
  std::optional<EntityDescriptor> referring_entity;
  EntityDescriptor requester;
  ServiceTypeFlags service_type;
  EntityDescriptor resolver;
  EntityDescriptor referrer;

  friend bool operator==(const UsageEvent&, const UsageEvent&) = default;
};

/// Throws InvalidEntity naming the first violated invariant.
void validate_entity(const EntityDescriptor& e, const char* role);
void validate_referent_metadata(const ReferentMetadata& m);
/// Full event check: referent non-empty, identifiers well-formed, metadata
/// formats valid, every text field representable in XML 1.0.
void validate_event(const UsageEvent& e);

bool is_valid_issn(std::string_view issn);

UsageEvent create_event(EntityDescriptor referent, EntityDescriptor requester,
                        ServiceTypeFlags service_type, EntityDescriptor resolver,
                        EntityDescriptor referrer, std::optional<EntityDescriptor> referring_entity,
                        const Clock& clock, const IdSource& id_source);

EntityDescriptor identified_by(std::string identifier);

}  // namespace usagelog
