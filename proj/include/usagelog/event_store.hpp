#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "usagelog/model.hpp"

namespace usagelog {

struct Provenance {
  enum class Kind { Local, Harvested };
  Kind kind = Kind::Local;
  std::string source_base_url;  // Harvested only

  static Provenance local() { return {}; }
  static Provenance harvested(std::string base_url) { return {Kind::Harvested, std::move(base_url)}; }
  bool is_local() const { return kind == Kind::Local; }
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct StoredRecord {
  UsageEvent event;
  UtcTime upload_datestamp;
  Provenance provenance;
  friend bool operator==(const StoredRecord&, const StoredRecord&) = default;
};

enum class ProvenanceFilter { Any, LocalOnly, HarvestedOnly };

struct DatestampPage {
  std::vector<StoredRecord> records;  // ascending (upload_datestamp, event_id)
  std::optional<std::string> next_cursor;
  std::size_t complete_size = 0;
};

/// Header fields of a stored record, available without parsing its XML.
struct RecordHeader {
  Uuid event_id;
  UtcTime upload_datestamp;
  Provenance provenance;
};

/// Append-only event log with a UUID index and a (datestamp, UUID) index.
///
/// On disk: `<dir>/events.log`, one record per line:
///   crc32 \t uuid \t datestamp \t provenance \t canonical-context-object
/// where the CRC covers everything after its own tab. A torn final line is
/// truncated on open; corruption anywhere else raises StorageFailure.
///
/// Single writer, many readers: appends take an exclusive lock, queries a
/// shared one, so a reader always observes a prefix of committed appends.
class EventStore {
 public:
  struct Options {
    bool sync_each_append = false;  // fsync after every append
  };

  explicit EventStore(std::filesystem::path dir) : EventStore(std::move(dir), Options{}) {}
  EventStore(std::filesystem::path dir, Options options);
  ~EventStore();

  EventStore(const EventStore&) = delete;
  EventStore& operator=(const EventStore&) = delete;

  /// DuplicateEventId if the UUID is stored with different content; an
  /// identical re-append returns the original record unchanged.
  StoredRecord append(const UsageEvent& event, const Provenance& provenance, const Clock& clock);

  std::optional<StoredRecord> get_by_uuid(const Uuid& id) const;
  bool contains(const Uuid& id) const;

  /// Inclusive [from, until] window over upload datestamps. `cursor` is the
  /// opaque next_cursor of a previous page. BadCursor on unparsable cursors
  /// and InvalidArgument when from > until or limit == 0.
  DatestampPage range_by_datestamp(std::optional<UtcTime> from, std::optional<UtcTime> until,
                                   ProvenanceFilter filter, const std::optional<std::string>& cursor,
                                   std::size_t limit) const;

  /// Number of records in the window (no paging).
  std::size_t count_in_window(std::optional<UtcTime> from, std::optional<UtcTime> until,
                              ProvenanceFilter filter) const;

  std::size_t count(ProvenanceFilter filter = ProvenanceFilter::Any) const;
  std::optional<UtcTime> earliest_datestamp(ProvenanceFilter filter) const;

  /// Visits records in (datestamp, UUID) order with their raw canonical XML.
  void scan_raw(ProvenanceFilter filter,
                const std::function<void(const RecordHeader&, std::string_view xml)>& visit) const;
  void scan(ProvenanceFilter filter, const std::function<void(const StoredRecord&)>& visit) const;

  /// One canonical ContextObject document per line.
  void export_documents(std::ostream& out, ProvenanceFilter filter = ProvenanceFilter::Any) const;

  void flush();

  const std::filesystem::path& directory() const { return dir_; }

 private:
  struct Meta {
    UtcTime datestamp;
    Uuid id;
    std::uint64_t xml_offset;
    std::uint32_t xml_length;
    std::uint32_t provenance;  // index into provenances_
  };

  using Order = std::vector<std::uint32_t>;

  void load();
  std::uint32_t intern_provenance(const Provenance& p);
  std::string read_xml(const Meta& m) const;
  StoredRecord materialize(const Meta& m) const;
  const Order& order_for(ProvenanceFilter f) const;
  static void insert_sorted(Order& order, const std::vector<Meta>& metas, std::uint32_t idx);
  std::pair<std::size_t, std::size_t> window(const Order& order, std::optional<UtcTime> from,
                                             std::optional<UtcTime> until) const;

  std::filesystem::path dir_;
  Options options_;
  int fd_ = -1;
  std::uint64_t end_offset_ = 0;
  mutable std::shared_mutex mu_;
  std::vector<Meta> metas_;
  std::vector<Provenance> provenances_;
  std::unordered_map<Uuid, std::uint32_t, UuidHash> by_id_;
  Order all_, local_, harvested_;
};

std::string encode_provenance(const Provenance& p);
std::optional<Provenance> decode_provenance(std::string_view text);

}  // namespace usagelog
