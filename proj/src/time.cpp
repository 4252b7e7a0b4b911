#include "usagelog/time.hpp"

#include <cstdio>
#include <memory>

namespace usagelog {
namespace {

using namespace std::chrono;

bool digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

std::optional<sys_days> make_day(int y, int m, int d) {
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd};
}

}  // namespace

std::string format_utc(UtcTime t) {
  const auto dp = floor<days>(t);
  const year_month_day ymd{dp};
  const hh_mm_ss hms{t - dp};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::string format_day(UtcTime t) { return format_utc(t).substr(0, 10); }

std::string format_datestamp(UtcTime t, Granularity g) {
  return g == Granularity::Day ? format_day(t) : format_utc(t);
}

std::optional<UtcTime> parse_utc(std::string_view s) {
  if (s.size() != 20 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' ||
      s[16] != ':' || s[19] != 'Z')
    return std::nullopt;
  int y, mo, d, h, mi, se;
  if (!digits(s, 0, 4, y) || !digits(s, 5, 2, mo) || !digits(s, 8, 2, d) ||
      !digits(s, 11, 2, h) || !digits(s, 14, 2, mi) || !digits(s, 17, 2, se))
    return std::nullopt;
  if (h > 23 || mi > 59 || se > 59) return std::nullopt;
  auto dp = make_day(y, mo, d);
  if (!dp) return std::nullopt;
  return UtcTime{*dp} + hours(h) + minutes(mi) + seconds(se);
}

std::optional<Datestamp> parse_datestamp(std::string_view s) {
  if (s.size() == 10) {
    if (s[4] != '-' || s[7] != '-') return std::nullopt;
    int y, mo, d;
    if (!digits(s, 0, 4, y) || !digits(s, 5, 2, mo) || !digits(s, 8, 2, d)) return std::nullopt;
    auto dp = make_day(y, mo, d);
    if (!dp) return std::nullopt;
    return Datestamp{UtcTime{*dp}, Granularity::Day};
  }
  auto t = parse_utc(s);
  if (!t) return std::nullopt;
  return Datestamp{*t, Granularity::Seconds};
}

UtcTime day_floor(UtcTime t) { return UtcTime{floor<days>(t)}; }
UtcTime day_ceil(UtcTime t) { return day_floor(t) + hours(23) + minutes(59) + seconds(59); }

Clock system_clock() {
  return [] { return floor<seconds>(std::chrono::system_clock::now()); };
}

Clock stepping_clock(UtcTime start, std::chrono::seconds step) {
  auto next = std::make_shared<UtcTime>(start);
  return [next, step] {
    const UtcTime now = *next;
    *next += step;
    return now;
  };
}

}  // namespace usagelog
