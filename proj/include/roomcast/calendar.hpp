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

#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "roomcast/time.hpp"

namespace roomcast {

/// Greek national holidays 2017-2020, fixed and Orthodox-Easter based.
inline constexpr std::string_view kGreekHolidays2017To2020 = R"(# Greek national holidays, 2017-2020
2017-01-01
2017-01-06
2017-02-27
2017-03-25
2017-04-14
2017-04-17
2017-05-01
2017-06-05
2017-08-15
2017-10-28
2017-12-25
2017-12-26
2018-01-01
2018-01-06
2018-02-19
2018-03-25
2018-04-06
2018-04-09
2018-05-01
2018-05-28
2018-08-15
2018-10-28
2018-12-25
2018-12-26
2019-01-01
2019-01-06
2019-03-11
2019-03-25
2019-04-26
2019-04-29
2019-05-01
2019-06-17
2019-08-15
2019-10-28
2019-12-25
2019-12-26
2020-01-01
2020-01-06
2020-03-02
2020-03-25
2020-04-17
2020-04-20
2020-05-01
2020-06-08
2020-08-15
2020-10-28
2020-12-25
2020-12-26
)";

/// National holiday dates plus an always-on Saturday/Sunday rule.
class HolidayCalendar {
 public:
  HolidayCalendar() = default;
  explicit HolidayCalendar(std::set<Date> dates) : dates_(std::move(dates)) {}

  /// One ISO date per line; `#` starts a comment; blank lines ignored.
  static HolidayCalendar parse(std::istream& in) {
    std::set<Date> dates;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      const auto last = line.find_last_not_of(" \t\r");
      const auto token = line.substr(first, last - first + 1);
      try {
        dates.insert(parse_date(token));
      } catch (const DataError&) {
        throw DataError("holiday calendar line " + std::to_string(line_no) + ": bad date '" +
                        token + "'");
      }
    }
    return HolidayCalendar(std::move(dates));
  }

  static HolidayCalendar greek_default() {
    std::istringstream in{std::string(kGreekHolidays2017To2020)};
    return parse(in);
  }

  bool is_holiday(const Date& date) const {
    const auto wd = std::chrono::weekday{std::chrono::sys_days{date}}.iso_encoding();
    return wd >= 6 || dates_.contains(date);
  }

  const std::set<Date>& dates() const { return dates_; }

 private:
  std::set<Date> dates_;
};

}  // namespace roomcast
