#pragma once

#include <cstdint>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "usagelog/model.hpp"

namespace usagelog {

struct SessionRecord {
  std::string_view requester;
  UtcTime time;
  Uuid event_id;
};

/// Session id per input record. Records of one requester are ordered by
/// (time, event_id); a gap of at least `gap_minutes` starts a new session.
/// Ids are dense, assigned by requester (ascending) then time.
std::vector<std::uint32_t> sessionize(const std::vector<SessionRecord>& records, double gap_minutes);

std::unordered_map<Uuid, std::uint32_t, UuidHash> sessionize(const std::vector<UsageEvent>& events,
                                                             double gap_minutes);

}  // namespace usagelog
