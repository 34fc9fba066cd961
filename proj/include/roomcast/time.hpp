/*
 * Copyright 2026 The roomcast Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "roomcast/common.hpp"

namespace roomcast {

using Date = std::chrono::year_month_day;

namespace detail {

inline bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace detail

/// Parses YYYY-MM-DD.
inline Date parse_date(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
      !detail::parse_int(text.substr(0, 4), y) ||
      !detail::parse_int(text.substr(5, 2), m) ||
      !detail::parse_int(text.substr(8, 2), d)) {
    throw DataError("invalid date '" + std::string(text) + "', expected YYYY-MM-DD");
  }
  Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
            std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) throw DataError("invalid calendar date '" + std::string(text) + "'");
  return date;
}

inline std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

/// Parses an ISO-8601 instant: `YYYY-MM-DD[T| ]hh:mm[:ss][Z|(+|-)hh[:mm]]`.
/// A missing offset means UTC.
inline Instant parse_instant(std::string_view text) {
  const auto fail = [&]() -> Instant {
    throw DataError("invalid ISO-8601 timestamp '" + std::string(text) + "'");
  };
  if (text.size() < 16) return fail();
  Date date;
  try {
    date = parse_date(text.substr(0, 10));
  } catch (const DataError&) {
    return fail();
  }
  if (text[10] != 'T' && text[10] != ' ') return fail();
  int hh = 0, mm = 0, ss = 0;
  if (!detail::parse_int(text.substr(11, 2), hh) || text[13] != ':' ||
      !detail::parse_int(text.substr(14, 2), mm)) {
    return fail();
  }
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    if (pos + 3 > text.size() || !detail::parse_int(text.substr(pos + 1, 2), ss)) return fail();
    pos += 3;
  }
  int offset_minutes = 0;
  if (pos < text.size()) {
    const char c = text[pos];
    if (c == 'Z' && pos + 1 == text.size()) {
      pos += 1;
    } else if (c == '+' || c == '-') {
      int oh = 0, om = 0;
      if (pos + 3 > text.size() || !detail::parse_int(text.substr(pos + 1, 2), oh)) return fail();
      std::size_t q = pos + 3;
      if (q < text.size()) {
        if (text[q] == ':') ++q;
        if (q + 2 != text.size() || !detail::parse_int(text.substr(q, 2), om)) return fail();
      }
      offset_minutes = (c == '+' ? 1 : -1) * (oh * 60 + om);
      pos = text.size();
    } else {
      return fail();
    }
  }
  if (pos != text.size() || hh > 23 || mm > 59 || ss > 60) return fail();
  const auto local = std::chrono::sys_days{date} + std::chrono::hours{hh} +
                     std::chrono::minutes{mm} + std::chrono::seconds{ss};
  return std::chrono::time_point_cast<Seconds>(local - std::chrono::minutes{offset_minutes});
}

/// Formats as `YYYY-MM-DDThh:mm:ssZ`.
inline std::string format_instant(Instant t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const Date date{day};
  const auto secs = (t - day).count();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02lld:%02lld:%02lldZ", format_date(date).c_str(),
                static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                static_cast<long long>(secs % 60));
  return buf;
}

/// Broken-down local calendar fields.
struct LocalFields {
  Date date;
  int hour = 0;     ///< 0..23
  int minute = 0;   ///< 0..59
  int weekday = 1;  ///< ISO: Monday = 1 .. Sunday = 7
  int month = 1;    ///< 1..12
  int quarter = 1;  ///< 1..4
};

/// Local civil time as a fixed offset from UTC. Defaults to UTC+2.
struct LocalClock {
  int utc_offset_minutes = 120;

  Instant to_local(Instant utc) const { return utc + std::chrono::minutes{utc_offset_minutes}; }

  /// UTC instant of local midnight at the start of `date`.
  Instant midnight(const Date& date) const {
    return Instant{std::chrono::sys_days{date}} - std::chrono::minutes{utc_offset_minutes};
  }

  Date local_date(Instant utc) const {
    return Date{std::chrono::floor<std::chrono::days>(to_local(utc))};
  }

  LocalFields fields(Instant utc) const {
    const Instant local = to_local(utc);
    const auto day = std::chrono::floor<std::chrono::days>(local);
    LocalFields f;
    f.date = Date{day};
    const auto secs = (local - day).count();
    f.hour = static_cast<int>(secs / 3600);
    f.minute = static_cast<int>(secs / 60 % 60);
    f.weekday = static_cast<int>(std::chrono::weekday{day}.iso_encoding());
    f.month = static_cast<int>(static_cast<unsigned>(f.date.month()));
    f.quarter = (f.month - 1) / 3 + 1;
    return f;
  }
};

}  // namespace roomcast
