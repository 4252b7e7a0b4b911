#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "usagelog/event_store.hpp"
#include "usagelog/kev.hpp"
#include "usagelog/model.hpp"

namespace usagelog {

/// One linking-server log line:
///   timestamp \t requester \t service \t resolver \t kev-query
struct RawLogLine {
  UtcTime timestamp;
  std::string requester;
  std::string service;
  std::string resolver;
  std::string kev_query;
  friend bool operator==(const RawLogLine&, const RawLogLine&) = default;
};

/// MalformedLine on a field count other than five, BadTimestamp on a bad
/// first field.
RawLogLine parse_raw_line(std::string_view line);
std::string format_raw_line(const RawLogLine& line);
/// Re-encodes the KEV query in the fixed key order of format_kev_openurl.
RawLogLine normalize_raw_line(const RawLogLine& line);

/// `urn:...` passes through; anything else is treated as an address.
std::string requester_uri(std::string_view requester);
ServiceTypeFlags parse_service(std::string_view service);
std::string format_service(const ServiceTypeFlags& flags);

/// Builds a validated event; an empty resolver field falls back to
/// `default_resolver`.
UsageEvent parse_log_line(std::string_view line, std::string_view default_resolver,
                          const IdSource& id_source);

/// The raw line an event would have been logged as (timestamp, requester,
/// service, resolver, KEV of referent metadata, identifiers and referrer).
RawLogLine event_to_raw_line(const UsageEvent& event);

struct IngestReport {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t duplicates = 0;
};

/// Appends every parsable line to the store as a Local record. Rejected lines
/// are written with their reason to `<input>.rejects`.
IngestReport ingest_file(const std::filesystem::path& input, EventStore& store,
                         std::string_view default_resolver, const IdSource& id_source,
                         const Clock& clock);

}  // namespace usagelog
