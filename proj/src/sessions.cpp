#include "usagelog/sessions.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <tuple>

namespace usagelog {

std::vector<std::uint32_t> sessionize(const std::vector<SessionRecord>& records, double gap_minutes) {
  std::vector<std::uint32_t> order(records.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    const auto& x = records[a];
    const auto& y = records[b];
    return std::tie(x.requester, x.time, x.event_id) < std::tie(y.requester, y.time, y.event_id);
  });
  const double gap_s = gap_minutes * 60.0;
  std::vector<std::uint32_t> out(records.size());
  std::uint32_t next = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& cur = records[order[i]];
    bool fresh = i == 0;
    if (!fresh) {
      const auto& prev = records[order[i - 1]];
      fresh = prev.requester != cur.requester ||
              static_cast<double>((cur.time - prev.time).count()) >= gap_s;
    }
    if (fresh && i > 0) ++next;
    out[order[i]] = next;
  }
  return out;
}

std::unordered_map<Uuid, std::uint32_t, UuidHash> sessionize(const std::vector<UsageEvent>& events,
                                                             double gap_minutes) {
  std::vector<std::string> requesters;
  requesters.reserve(events.size());
  for (const auto& e : events)
    requesters.push_back(e.requester.identifiers.empty() ? std::string()
                                                         : e.requester.identifiers.front());
  std::vector<SessionRecord> records;
  records.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i)
    records.push_back({requesters[i], events[i].event_timestamp, events[i].event_id});
  const auto ids = sessionize(records, gap_minutes);
  std::unordered_map<Uuid, std::uint32_t, UuidHash> out;
  out.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) out.emplace(events[i].event_id, ids[i]);
  return out;
}

}  // namespace usagelog
