#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace usagelog {

/// UTC instant at seconds precision.
using UtcTime = std::chrono::sys_seconds;

enum class Granularity { Day, Seconds };

/// `YYYY-MM-DDThh:mm:ssZ`
std::string format_utc(UtcTime t);
/// `YYYY-MM-DD`
std::string format_day(UtcTime t);
std::string format_datestamp(UtcTime t, Granularity g);

/// Strict parse of `YYYY-MM-DDThh:mm:ssZ`; nullopt on any deviation.
std::optional<UtcTime> parse_utc(std::string_view text);

struct Datestamp {
  UtcTime time;
  Granularity granularity;
};

/// Accepts either OAI-PMH granularity; a day value maps to its 00:00:00Z.
std::optional<Datestamp> parse_datestamp(std::string_view text);

UtcTime day_floor(UtcTime t);
UtcTime day_ceil(UtcTime t);  // 23:59:59 of the same day

using Clock = std::function<UtcTime()>;

Clock system_clock();

/// Test clock: returns start, start+step, start+2*step, ...
Clock stepping_clock(UtcTime start, std::chrono::seconds step = std::chrono::seconds(0));

}  // namespace usagelog
