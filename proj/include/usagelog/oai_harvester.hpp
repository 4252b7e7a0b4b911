#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "usagelog/event_store.hpp"
#include "usagelog/oai_provider.hpp"

namespace usagelog {

/// Fetches one OAI-PMH response body. Implementations throw
/// Error(TransportError) on connection failures and non-200 statuses.
class OaiTransport {
 public:
  virtual ~OaiTransport() = default;
  virtual std::string get(const std::string& base_url, const OaiParams& params) = 0;
};

/// Real HTTP client (plain http only).
class HttpTransport : public OaiTransport {
 public:
  explicit HttpTransport(std::chrono::seconds timeout = std::chrono::seconds(30));
  std::string get(const std::string& base_url, const OaiParams& params) override;

 private:
  std::chrono::seconds timeout_;
};

/// Routes requests straight to providers registered by base URL.
class InProcessTransport : public OaiTransport {
 public:
  void add(const OaiProvider& provider);
  std::string get(const std::string& base_url, const OaiParams& params) override;

 private:
  std::map<std::string, const OaiProvider*> providers_;
};

struct HarvestSource {
  std::string base_url;
  std::optional<UtcTime> last_watermark;
  bool enabled = true;
  /// UUIDs this source delivered inside the overlap window of the watermark;
  /// seeing them again on resume is expected and not counted.
  std::set<Uuid> boundary;
};

struct HarvestError {
  std::size_t page = 0;
  std::string reason;
};

struct HarvestReport {
  std::string source;
  std::size_t fetched = 0;
  std::size_t new_records = 0;
  std::size_t duplicates = 0;
  std::size_t overlap_skipped = 0;
  std::size_t quarantined = 0;
  std::vector<HarvestError> errors;
  std::optional<UtcTime> new_watermark;
  bool complete = false;  // the pass ran to exhaustion
};

struct HarvestOptions {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{200};
  std::chrono::seconds overlap{1};
  bool full = false;  // ignore the watermark
  std::optional<std::filesystem::path> reject_file;
};

/// One incremental ListRecords pass. On a complete pass the source's
/// watermark and boundary set are updated in place; otherwise both are left
/// alone and the report lists the errors.
HarvestReport harvest_source(HarvestSource& source, EventStore& store, OaiTransport& transport,
                             const Clock& clock, const HarvestOptions& options = {});

/// Sources file: one base URL per line, `#` comments and blank lines ignored.
std::vector<HarvestSource> load_source_list(const std::filesystem::path& file);

/// Watermark state: `url \t watermark|- \t uuid,uuid,...` per line.
void load_harvest_state(const std::filesystem::path& file, std::vector<HarvestSource>& sources);
void save_harvest_state(const std::filesystem::path& file, const std::vector<HarvestSource>& sources);

}  // namespace usagelog
