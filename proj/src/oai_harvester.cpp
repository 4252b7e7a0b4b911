#include "usagelog/oai_harvester.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "usagelog/context_object.hpp"
#include "usagelog/error.hpp"
#include "usagelog/oai_http.hpp"
#include "usagelog/xml.hpp"

namespace usagelog {

HttpTransport::HttpTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

std::string HttpTransport::get(const std::string& base_url, const OaiParams& params) {
  const auto scheme = base_url.find("://");
  const auto slash = base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  const std::string origin = base_url.substr(0, slash);
  httplib::Client client(origin);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  const std::string target = url_path(base_url) + "?" + format_query_string(params);
  auto res = client.Get(target);
  if (!res)
    throw Error(ErrorCode::TransportError,
                base_url + ": " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw Error(ErrorCode::TransportError, base_url + ": HTTP status " + std::to_string(res->status));
  return res->body;
}

void InProcessTransport::add(const OaiProvider& provider) {
  providers_[provider.config().base_url] = &provider;
}

std::string InProcessTransport::get(const std::string& base_url, const OaiParams& params) {
  auto it = providers_.find(base_url);
  if (it == providers_.end())
    throw Error(ErrorCode::TransportError, base_url + ": connection refused");
  return it->second->handle(params).body;
}

namespace {

std::mutex g_inflight_mu;
std::set<std::string> g_inflight;

struct InflightGuard {
  std::string url;
  explicit InflightGuard(std::string u) : url(std::move(u)) {
    std::lock_guard lock(g_inflight_mu);
    if (!g_inflight.insert(url).second)
      throw Error(ErrorCode::InvalidArgument, "a harvest of " + url + " is already running");
  }
  ~InflightGuard() {
    std::lock_guard lock(g_inflight_mu);
    g_inflight.erase(url);
  }
};

std::mutex g_reject_mu;

void quarantine(const HarvestOptions& options, const std::string& source, std::size_t page,
                const std::string& reason, const std::string& raw) {
  if (!options.reject_file) return;
  std::lock_guard lock(g_reject_mu);
  std::ofstream out(*options.reject_file, std::ios::app | std::ios::binary);
  if (!out) {
    spdlog::error("cannot open reject file {}", options.reject_file->string());
    return;
  }
  out << "# " << source << " page " << page << ": " << reason << '\n' << raw << '\n';
}

std::string fetch(OaiTransport& transport, const std::string& url, const OaiParams& params,
                  const HarvestOptions& options) {
  for (int attempt = 1;; ++attempt) {
    try {
      return transport.get(url, params);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TransportError || attempt >= options.max_attempts) throw;
      const auto delay = options.base_delay * (1 << (attempt - 1));
      spdlog::warn("{} (attempt {}/{}), retrying in {} ms", e.what(), attempt, options.max_attempts,
                   delay.count());
      std::this_thread::sleep_for(delay);
    }
  }
}

UtcTime overlap_start(UtcTime watermark, Granularity g, std::chrono::seconds overlap) {
  return g == Granularity::Day ? day_floor(watermark) : watermark - overlap;
}

const std::string kOai(oai::kNamespace);

}  // namespace

HarvestReport harvest_source(HarvestSource& source, EventStore& store, OaiTransport& transport,
                             const Clock& clock, const HarvestOptions& options) {
  if (!source.enabled) throw Error(ErrorCode::InvalidArgument, source.base_url + " is disabled");
  InflightGuard guard(source.base_url);
  HarvestReport report;
  report.source = source.base_url;
  report.new_watermark = source.last_watermark;

  std::size_t page = 0;
  auto fail = [&](std::string reason) {
    spdlog::error("harvest {} page {}: {}", source.base_url, page, reason);
    report.errors.push_back({page, std::move(reason)});
    return report;
  };

  Granularity granularity = Granularity::Seconds;
  try {
    const auto doc = xml::parse(fetch(transport, source.base_url, {{"verb", "Identify"}}, options));
    if (const auto* id = doc.child(kOai, "Identify"))
      if (const auto* g = id->child(kOai, "granularity"))
        if (xml::trim(g->text_content()) == "YYYY-MM-DD") granularity = Granularity::Day;
  } catch (const Error& e) {
    return fail(std::string("Identify: ") + e.what());
  }

  const bool incremental = !options.full && source.last_watermark.has_value();
  OaiParams first{{"verb", "ListRecords"}, {"metadataPrefix", std::string(oai::kMetadataPrefix)}};
  if (incremental) {
    const auto start = overlap_start(*source.last_watermark, granularity, options.overlap);
    first.emplace("from", format_datestamp(start, granularity));
  }

  std::set<Uuid> seen;
  std::multimap<UtcTime, Uuid> recent;
  std::optional<UtcTime> max_seen;
  bool restarted = false;
  OaiParams params = first;

  while (true) {
    ++page;
    std::string body;
    try {
      body = fetch(transport, source.base_url, params, options);
    } catch (const Error& e) {
      return fail(e.what());
    }
    xml::Node doc;
    try {
      doc = xml::parse(body);
    } catch (const Error& e) {
      ++report.quarantined;
      quarantine(options, source.base_url, page, e.what(), body);
      return fail(std::string("unparsable response: ") + e.what());
    }
    if (!doc.is(kOai, "OAI-PMH")) return fail("response is not an OAI-PMH document");
    if (const auto* err = doc.child(kOai, "error")) {
      const std::string code = err->attribute("code") ? *err->attribute("code") : "";
      if (code == "noRecordsMatch") break;
      if (code == "badResumptionToken" && page > 1 && !restarted) {
        spdlog::warn("harvest {}: resumption token rejected, restarting window", source.base_url);
        restarted = true;
        params = first;
        continue;
      }
      return fail("OAI error " + code + ": " + err->text_content());
    }
    const auto* list = doc.child(kOai, "ListRecords");
    if (!list) return fail("response lacks ListRecords");

    std::optional<std::string> token;
    for (const auto* el : list->elements()) {
      if (el->is(kOai, "resumptionToken")) {
        const auto text = std::string(xml::trim(el->text_content()));
        if (!text.empty()) token = text;
        continue;
      }
      if (!el->is(kOai, "record")) continue;
      const auto* header = el->child(kOai, "header");
      const std::string* status = header ? header->attribute("status") : nullptr;
      if (status && *status == "deleted") continue;
      try {
        if (!header) throw Error(ErrorCode::ParseError, "record without header");
        const auto* ident = header->child(kOai, "identifier");
        const auto* ds = header->child(kOai, "datestamp");
        if (!ident || !ds) throw Error(ErrorCode::ParseError, "header lacks identifier or datestamp");
        const auto datestamp = parse_datestamp(xml::trim(ds->text_content()));
        if (!datestamp) throw Error(ErrorCode::ParseError, "bad datestamp '" + ds->text_content() + "'");
        const auto* metadata = el->child(kOai, "metadata");
        const xml::Node* co = nullptr;
        if (metadata)
          for (const auto* m : metadata->elements()) co = m;
        if (!co) throw Error(ErrorCode::ParseError, "record without metadata");
        UsageEvent event = context_object_from_node(*co);
        const auto header_id = Uuid::from_urn(xml::trim(ident->text_content()));
        if (!header_id || *header_id != event.event_id)
          throw Error(ErrorCode::ParseError, "header identifier does not match the ContextObject");
        validate_event(event);

        if (!seen.insert(event.event_id).second) continue;
        if (!max_seen || datestamp->time > *max_seen) max_seen = datestamp->time;
        recent.emplace(datestamp->time, event.event_id);
        recent.erase(recent.begin(),
                     recent.lower_bound(overlap_start(*max_seen, granularity, options.overlap)));
        if (incremental && source.boundary.count(event.event_id)) {
          ++report.overlap_skipped;
          continue;
        }
        ++report.fetched;
        if (store.contains(event.event_id)) {
          ++report.duplicates;
        } else {
          store.append(event, Provenance::harvested(source.base_url), clock);
          ++report.new_records;
        }
      } catch (const Error& e) {
        if (e.code() == ErrorCode::StorageFailure) return fail(e.what());
        ++report.quarantined;
        report.errors.push_back({page, e.what()});
        quarantine(options, source.base_url, page, e.what(), xml::serialize_fragment(*el));
      }
    }
    if (!token) break;
    params = {{"verb", "ListRecords"}, {"resumptionToken", *token}};
  }

  report.complete = true;
  store.flush();
  if (max_seen && (!source.last_watermark || *max_seen > *source.last_watermark)) {
    source.last_watermark = *max_seen;
    source.boundary.clear();
  }
  if (source.last_watermark) {
    const auto cut = overlap_start(*source.last_watermark, granularity, options.overlap);
    for (auto it = recent.lower_bound(cut); it != recent.end(); ++it) source.boundary.insert(it->second);
  }
  report.new_watermark = source.last_watermark;
  spdlog::info("harvest {}: fetched {} new {} duplicates {} overlap {} quarantined {}",
               source.base_url, report.fetched, report.new_records, report.duplicates,
               report.overlap_skipped, report.quarantined);
  return report;
}

std::vector<HarvestSource> load_source_list(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::FileUnreadable, "cannot read " + file.string());
  std::vector<HarvestSource> out;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto url = xml::trim(line);
    if (url.empty()) continue;
    HarvestSource s;
    s.base_url = std::string(url);
    out.push_back(std::move(s));
  }
  return out;
}

void load_harvest_state(const std::filesystem::path& file, std::vector<HarvestSource>& sources) {
  std::ifstream in(file);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string url, wm, ids;
    if (!std::getline(fields, url, '\t') || !std::getline(fields, wm, '\t')) continue;
    std::getline(fields, ids);
    for (auto& s : sources) {
      if (s.base_url != url) continue;
      s.last_watermark = wm == "-" ? std::nullopt : parse_utc(wm);
      s.boundary.clear();
      std::istringstream list(ids);
      std::string id;
      while (std::getline(list, id, ','))
        if (auto u = Uuid::from_string(id)) s.boundary.insert(*u);
    }
  }
}

void save_harvest_state(const std::filesystem::path& file, const std::vector<HarvestSource>& sources) {
  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    if (!out) throw Error(ErrorCode::StorageFailure, "cannot write " + tmp);
    for (const auto& s : sources) {
      out << s.base_url << '\t' << (s.last_watermark ? format_utc(*s.last_watermark) : "-") << '\t';
      bool first = true;
      for (const auto& id : s.boundary) {
        if (!first) out << ',';
        out << id.str();
        first = false;
      }
      out << '\n';
    }
    if (!out.flush()) throw Error(ErrorCode::StorageFailure, "cannot write " + tmp);
  }
  std::filesystem::rename(tmp, file);
}

}  // namespace usagelog
