#include "usagelog/log_line.hpp"

#include <spdlog/spdlog.h>

#include <fstream>

#include "usagelog/error.hpp"

namespace usagelog {

RawLogLine parse_raw_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::string_view fields[5];
  std::size_t n = 0, pos = 0;
  while (true) {
    const auto tab = line.find('\t', pos);
    if (n == 5) throw Error(ErrorCode::MalformedLine, "more than 5 tab-separated fields");
    fields[n++] = line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos);
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  if (n != 5)
    throw Error(ErrorCode::MalformedLine,
                "expected 5 tab-separated fields, found " + std::to_string(n));
  const auto ts = parse_utc(fields[0]);
  if (!ts) throw Error(ErrorCode::BadTimestamp, "bad timestamp '" + std::string(fields[0]) + "'");
  return RawLogLine{*ts, std::string(fields[1]), std::string(fields[2]), std::string(fields[3]),
                    std::string(fields[4])};
}

std::string format_raw_line(const RawLogLine& l) {
  std::string out = format_utc(l.timestamp);
  for (const auto* f : {&l.requester, &l.service, &l.resolver, &l.kev_query}) {
    out += '\t';
    out += *f;
  }
  return out;
}

RawLogLine normalize_raw_line(const RawLogLine& line) {
  RawLogLine out = line;
  out.kev_query = format_kev_openurl(parse_kev_openurl(line.kev_query));
  return out;
}

std::string requester_uri(std::string_view requester) {
  if (requester.rfind("urn:", 0) == 0) return std::string(requester);
  return "urn:ip:" + std::string(requester);
}

namespace {

constexpr std::string_view kIpPrefix = "urn:ip:";

struct ServiceName {
  std::string_view text;
  ServiceKind kind;
};
constexpr ServiceName kServiceNames[] = {
    {"fulltext", ServiceKind::FullText}, {"full-text", ServiceKind::FullText},
    {"abstract", ServiceKind::Abstract}, {"citation", ServiceKind::Citation},
    {"holding", ServiceKind::Holding},   {"holdings", ServiceKind::Holding},
};

}  // namespace

ServiceTypeFlags parse_service(std::string_view service) {
  ServiceTypeFlags flags;
  std::size_t pos = 0;
  while (pos <= service.size()) {
    auto comma = service.find(',', pos);
    if (comma == std::string_view::npos) comma = service.size();
    const auto item = service.substr(pos, comma - pos);
    pos = comma + 1;
    if (item.empty()) continue;
    bool known = false;
    for (const auto& s : kServiceNames)
      if (item == s.text) {
        flags.kinds.insert(s.kind);
        known = true;
      }
    if (!known) flags.other.insert(std::string(item));
  }
  return flags;
}

std::string format_service(const ServiceTypeFlags& flags) {
  std::string out;
  auto add = [&out](std::string_view s) {
    if (!out.empty()) out += ',';
    out += s;
  };
  for (auto k : flags.kinds) {
    switch (k) {
      case ServiceKind::FullText: add("fulltext"); break;
      case ServiceKind::Abstract: add("abstract"); break;
      case ServiceKind::Citation: add("citation"); break;
      case ServiceKind::Holding: add("holding"); break;
    }
  }
  for (const auto& o : flags.other) add(o);
  return out;
}

UsageEvent parse_log_line(std::string_view line, std::string_view default_resolver,
                          const IdSource& id_source) {
  const RawLogLine raw = parse_raw_line(line);
  KevResult kev = parse_kev_openurl(raw.kev_query);
  EntityDescriptor referent;
  referent.identifiers = std::move(kev.identifiers);
  if (!kev.metadata.empty()) referent.metadata = std::move(kev.metadata);
  EntityDescriptor referrer;
  if (kev.referrer_sid) referrer.identifiers.push_back(*kev.referrer_sid);
  EntityDescriptor resolver;
  const std::string_view resolver_id = raw.resolver.empty() ? default_resolver : raw.resolver;
  if (!resolver_id.empty()) resolver.identifiers.emplace_back(resolver_id);
  EntityDescriptor requester;
  if (!raw.requester.empty()) requester.identifiers.push_back(requester_uri(raw.requester));
  const UtcTime ts = raw.timestamp;
  return create_event(std::move(referent), std::move(requester), parse_service(raw.service),
                      std::move(resolver), std::move(referrer), std::nullopt,
                      [ts] { return ts; }, id_source);
}

RawLogLine event_to_raw_line(const UsageEvent& e) {
  RawLogLine raw;
  raw.timestamp = e.event_timestamp;
  if (!e.requester.identifiers.empty()) {
    const auto& id = e.requester.identifiers.front();
    raw.requester = id.rfind(kIpPrefix, 0) == 0 ? id.substr(kIpPrefix.size()) : id;
  }
  raw.service = format_service(e.service_type);
  if (!e.resolver.identifiers.empty()) raw.resolver = e.resolver.identifiers.front();
  KevResult kev;
  if (e.referent.metadata) kev.metadata = *e.referent.metadata;
  kev.identifiers = e.referent.identifiers;
  if (!e.referrer.identifiers.empty()) kev.referrer_sid = e.referrer.identifiers.front();
  raw.kev_query = format_kev_openurl(kev);
  return raw;
}

IngestReport ingest_file(const std::filesystem::path& input, EventStore& store,
                         std::string_view default_resolver, const IdSource& id_source,
                         const Clock& clock) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileUnreadable, "cannot read " + input.string());
  const auto reject_path = input.string() + ".rejects";
  std::ofstream rejects;
  IngestReport report;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    try {
      const UsageEvent event = parse_log_line(line, default_resolver, id_source);
      const bool existed = store.contains(event.event_id);
      store.append(event, Provenance::local(), clock);
      if (existed) ++report.duplicates;
      else ++report.accepted;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::StorageFailure) throw;
      ++report.rejected;
      if (!rejects.is_open()) rejects.open(reject_path, std::ios::trunc | std::ios::binary);
      rejects << line_no << '\t' << to_string(e.code()) << ": " << e.what() << '\t' << line << '\n';
    }
  }
  store.flush();
  if (report.rejected)
    spdlog::warn("{}: {} lines rejected, see {}", input.string(), report.rejected, reject_path);
  return report;
}

}  // namespace usagelog
