#include "usagelog/event_store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <tuple>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <mutex>
#include <ostream>

#include "usagelog/context_object.hpp"
#include "usagelog/error.hpp"

namespace usagelog {
namespace {

std::uint32_t crc_of(std::string_view s) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

std::string hex8(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

[[noreturn]] void storage_failure(const std::string& what) {
  throw Error(ErrorCode::StorageFailure, what + (errno ? std::string(": ") + std::strerror(errno) : ""));
}

std::string encode_cursor(UtcTime ds, const Uuid& id) {
  return "c1." + std::to_string(ds.time_since_epoch().count()) + "." + id.str();
}

std::pair<UtcTime, Uuid> decode_cursor(std::string_view text) {
  auto bad = [&] { throw Error(ErrorCode::BadCursor, "unparsable cursor '" + std::string(text) + "'"); };
  if (text.substr(0, 3) != "c1.") bad();
  const auto rest = text.substr(3);
  const auto dot = rest.find('.');
  if (dot == std::string_view::npos) bad();
  long long secs = 0;
  const auto num = rest.substr(0, dot);
  auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), secs);
  if (ec != std::errc() || p != num.data() + num.size()) bad();
  const auto id = Uuid::from_string(rest.substr(dot + 1));
  if (!id) bad();
  return {UtcTime{std::chrono::seconds(secs)}, *id};
}

}  // namespace

std::string encode_provenance(const Provenance& p) {
  return p.is_local() ? std::string("L") : "H:" + p.source_base_url;
}

std::optional<Provenance> decode_provenance(std::string_view text) {
  if (text == "L") return Provenance::local();
  if (text.size() > 2 && text.substr(0, 2) == "H:")
    return Provenance::harvested(std::string(text.substr(2)));
  return std::nullopt;
}

EventStore::EventStore(std::filesystem::path dir, Options options)
    : dir_(std::move(dir)), options_(options) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::StorageFailure, "cannot create " + dir_.string() + ": " + ec.message());
  load();
}

EventStore::~EventStore() {
  if (fd_ >= 0) {
    ::fsync(fd_);
    ::close(fd_);
  }
}

std::uint32_t EventStore::intern_provenance(const Provenance& p) {
  for (std::uint32_t i = 0; i < provenances_.size(); ++i)
    if (provenances_[i] == p) return i;
  provenances_.push_back(p);
  return static_cast<std::uint32_t>(provenances_.size() - 1);
}

void EventStore::load() {
  const auto path = dir_ / "events.log";
  errno = 0;
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) storage_failure("cannot open " + path.string());

  std::ifstream in(path, std::ios::binary);
  std::string line;
  std::uint64_t offset = 0;
  std::size_t line_no = 0;
  while (true) {
    const std::uint64_t line_start = offset;
    if (!std::getline(in, line)) break;
    ++line_no;
    const bool terminated = !in.eof();
    offset += line.size() + (terminated ? 1 : 0);
    const bool last = in.peek() == std::char_traits<char>::eof();

    auto corrupt = [&](const char* why) {
      if (last) {
        // Torn tail from an interrupted append: drop it.
        if (::ftruncate(fd_, static_cast<off_t>(line_start)) != 0)
          storage_failure("cannot truncate torn record");
        offset = line_start;
        return;
      }
      errno = 0;
      storage_failure(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };

    if (!terminated) {
      corrupt("unterminated record");
      break;
    }
    std::string_view v(line);
    std::array<std::size_t, 4> tabs{};
    std::size_t pos = 0;
    bool ok = true;
    for (auto& t : tabs) {
      t = v.find('\t', pos);
      if (t == std::string_view::npos) {
        ok = false;
        break;
      }
      pos = t + 1;
    }
    if (!ok || tabs[0] != 8) {
      corrupt("malformed record framing");
      if (last) break;
      continue;
    }
    std::uint32_t crc = 0;
    std::from_chars(v.data(), v.data() + 8, crc, 16);
    if (crc != crc_of(v.substr(9))) {
      corrupt("checksum mismatch");
      if (last) break;
      continue;
    }
    const auto id = Uuid::from_string(v.substr(tabs[0] + 1, tabs[1] - tabs[0] - 1));
    const auto ds = parse_utc(v.substr(tabs[1] + 1, tabs[2] - tabs[1] - 1));
    const auto prov = decode_provenance(v.substr(tabs[2] + 1, tabs[3] - tabs[2] - 1));
    if (!id || !ds || !prov) {
      corrupt("bad record header");
      if (last) break;
      continue;
    }
    Meta m{*ds, *id, line_start + tabs[3] + 1, static_cast<std::uint32_t>(v.size() - tabs[3] - 1),
           intern_provenance(*prov)};
    const auto idx = static_cast<std::uint32_t>(metas_.size());
    metas_.push_back(m);
    by_id_.emplace(m.id, idx);
  }
  end_offset_ = offset;

  auto key_less = [this](std::uint32_t a, std::uint32_t b) {
    const auto& x = metas_[a];
    const auto& y = metas_[b];
    return std::tie(x.datestamp, x.id) < std::tie(y.datestamp, y.id);
  };
  all_.resize(metas_.size());
  for (std::uint32_t i = 0; i < metas_.size(); ++i) all_[i] = i;
  std::stable_sort(all_.begin(), all_.end(), key_less);
  for (auto i : all_) (provenances_[metas_[i].provenance].is_local() ? local_ : harvested_).push_back(i);
}

void EventStore::insert_sorted(Order& order, const std::vector<Meta>& metas, std::uint32_t idx) {
  const auto& m = metas[idx];
  auto less = [&](std::uint32_t a, const Meta& key) {
    return std::tie(metas[a].datestamp, metas[a].id) < std::tie(key.datestamp, key.id);
  };
  if (order.empty() || less(order.back(), m)) {
    order.push_back(idx);
    return;
  }
  order.insert(std::lower_bound(order.begin(), order.end(), m, less), idx);
}

StoredRecord EventStore::append(const UsageEvent& event, const Provenance& provenance,
                                const Clock& clock) {
  validate_event(event);
  const std::string xml = serialize_context_object(event);
  std::unique_lock lock(mu_);
  if (auto it = by_id_.find(event.event_id); it != by_id_.end()) {
    const auto& m = metas_[it->second];
    if (read_xml(m) != xml)
      throw Error(ErrorCode::DuplicateEventId,
                  event.event_id.urn() + " is already stored with different content");
    return StoredRecord{event, m.datestamp, provenances_[m.provenance]};
  }
  const UtcTime ds = clock();
  std::string body = event.event_id.str();
  body += '\t';
  body += format_utc(ds);
  body += '\t';
  body += encode_provenance(provenance);
  body += '\t';
  const std::size_t xml_at = 9 + body.size();
  body += xml;
  std::string line = hex8(crc_of(body));
  line += '\t';
  line += body;
  line += '\n';

  std::size_t written = 0;
  while (written < line.size()) {
    const auto n = ::pwrite(fd_, line.data() + written, line.size() - written,
                            static_cast<off_t>(end_offset_ + written));
    if (n < 0) {
      if (errno == EINTR) continue;
      storage_failure("append failed");
    }
    written += static_cast<std::size_t>(n);
  }
  if (options_.sync_each_append && ::fsync(fd_) != 0) storage_failure("fsync failed");

  Meta m{ds, event.event_id, end_offset_ + xml_at, static_cast<std::uint32_t>(xml.size()),
         intern_provenance(provenance)};
  end_offset_ += line.size();
  const auto idx = static_cast<std::uint32_t>(metas_.size());
  metas_.push_back(m);
  by_id_.emplace(m.id, idx);
  insert_sorted(all_, metas_, idx);
  insert_sorted(provenance.is_local() ? local_ : harvested_, metas_, idx);
  return StoredRecord{event, ds, provenance};
}

std::string EventStore::read_xml(const Meta& m) const {
  std::string buf(m.xml_length, '\0');
  std::size_t got = 0;
  while (got < buf.size()) {
    const auto n = ::pread(fd_, buf.data() + got, buf.size() - got,
                           static_cast<off_t>(m.xml_offset + got));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) storage_failure("read failed");
    got += static_cast<std::size_t>(n);
  }
  return buf;
}

StoredRecord EventStore::materialize(const Meta& m) const {
  return StoredRecord{parse_context_object(read_xml(m)), m.datestamp, provenances_[m.provenance]};
}

std::optional<StoredRecord> EventStore::get_by_uuid(const Uuid& id) const {
  std::shared_lock lock(mu_);
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return materialize(metas_[it->second]);
}

bool EventStore::contains(const Uuid& id) const {
  std::shared_lock lock(mu_);
  return by_id_.count(id) != 0;
}

const EventStore::Order& EventStore::order_for(ProvenanceFilter f) const {
  switch (f) {
    case ProvenanceFilter::LocalOnly: return local_;
    case ProvenanceFilter::HarvestedOnly: return harvested_;
    default: return all_;
  }
}

std::pair<std::size_t, std::size_t> EventStore::window(const Order& order,
                                                       std::optional<UtcTime> from,
                                                       std::optional<UtcTime> until) const {
  std::size_t lo = 0, hi = order.size();
  if (from) {
    lo = static_cast<std::size_t>(
        std::lower_bound(order.begin(), order.end(), *from,
                         [this](std::uint32_t a, UtcTime t) { return metas_[a].datestamp < t; }) -
        order.begin());
  }
  if (until) {
    hi = static_cast<std::size_t>(
        std::upper_bound(order.begin(), order.end(), *until,
                         [this](UtcTime t, std::uint32_t a) { return t < metas_[a].datestamp; }) -
        order.begin());
  }
  return {lo, std::max(lo, hi)};
}

DatestampPage EventStore::range_by_datestamp(std::optional<UtcTime> from,
                                             std::optional<UtcTime> until, ProvenanceFilter filter,
                                             const std::optional<std::string>& cursor,
                                             std::size_t limit) const {
  if (limit == 0) throw Error(ErrorCode::InvalidArgument, "limit must be at least 1");
  if (from && until && *from > *until)
    throw Error(ErrorCode::InvalidArgument, "from is later than until");
  std::optional<std::pair<UtcTime, Uuid>> after;
  if (cursor) after = decode_cursor(*cursor);

  std::shared_lock lock(mu_);
  const auto& order = order_for(filter);
  auto [lo, hi] = window(order, from, until);
  DatestampPage page;
  page.complete_size = hi - lo;
  std::size_t start = lo;
  if (after) {
    start = static_cast<std::size_t>(
        std::upper_bound(order.begin() + static_cast<std::ptrdiff_t>(lo),
                         order.begin() + static_cast<std::ptrdiff_t>(hi), *after,
                         [this](const std::pair<UtcTime, Uuid>& k, std::uint32_t a) {
                           return std::tie(k.first, k.second) <
                                  std::tie(metas_[a].datestamp, metas_[a].id);
                         }) -
        order.begin());
  }
  const std::size_t end = std::min(hi, start + limit);
  page.records.reserve(end - start);
  for (std::size_t i = start; i < end; ++i) page.records.push_back(materialize(metas_[order[i]]));
  if (end < hi) {
    const auto& last = metas_[order[end - 1]];
    page.next_cursor = encode_cursor(last.datestamp, last.id);
  }
  return page;
}

std::size_t EventStore::count_in_window(std::optional<UtcTime> from, std::optional<UtcTime> until,
                                        ProvenanceFilter filter) const {
  std::shared_lock lock(mu_);
  auto [lo, hi] = window(order_for(filter), from, until);
  return hi - lo;
}

std::size_t EventStore::count(ProvenanceFilter filter) const {
  std::shared_lock lock(mu_);
  return order_for(filter).size();
}

std::optional<UtcTime> EventStore::earliest_datestamp(ProvenanceFilter filter) const {
  std::shared_lock lock(mu_);
  const auto& order = order_for(filter);
  if (order.empty()) return std::nullopt;
  return metas_[order.front()].datestamp;
}

void EventStore::scan_raw(
    ProvenanceFilter filter,
    const std::function<void(const RecordHeader&, std::string_view xml)>& visit) const {
  std::shared_lock lock(mu_);
  for (auto i : order_for(filter)) {
    const auto& m = metas_[i];
    const std::string xml = read_xml(m);
    visit(RecordHeader{m.id, m.datestamp, provenances_[m.provenance]}, xml);
  }
}

void EventStore::scan(ProvenanceFilter filter,
                      const std::function<void(const StoredRecord&)>& visit) const {
  scan_raw(filter, [&](const RecordHeader& h, std::string_view xml) {
    visit(StoredRecord{parse_context_object(xml), h.upload_datestamp, h.provenance});
  });
}

void EventStore::export_documents(std::ostream& out, ProvenanceFilter filter) const {
  scan_raw(filter, [&](const RecordHeader&, std::string_view xml) { out << xml << '\n'; });
}

void EventStore::flush() {
  std::unique_lock lock(mu_);
  if (::fsync(fd_) != 0) storage_failure("fsync failed");
}

}  // namespace usagelog
