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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "roomcast/calendar.hpp"
#include "roomcast/common.hpp"
#include "roomcast/csv.hpp"
#include "roomcast/time.hpp"

namespace roomcast {

namespace columns {
inline constexpr const char* kOnOffState = "OnOffState";
inline constexpr const char* kOpMode = "OpMode";
inline constexpr const char* kOutTemp = "OutTemp";
inline constexpr const char* kOutHumid = "OutHumid";
inline constexpr const char* kSetpoint = "SetpointTemperature";
inline constexpr const char* kTimestamp = "timestamp";
inline constexpr const char* kTarget = "RT";
}  // namespace columns

struct Column {
  std::string name;
  std::vector<double> values;
};

/// Uniformly sampled, timestamp-indexed table of named columns plus the
/// room-temperature target.
struct TimeTable {
  std::vector<Instant> timestamps;
  std::vector<Column> columns;
  std::vector<double> target;
  std::string target_name = columns::kTarget;
  Seconds interval = kDefaultSampleInterval;

  std::size_t size() const { return timestamps.size(); }
  bool empty() const { return timestamps.empty(); }

  bool has_column(std::string_view name) const {
    return std::any_of(columns.begin(), columns.end(),
                       [&](const Column& c) { return c.name == name; });
  }

  const std::vector<double>& column(std::string_view name) const {
    for (const auto& c : columns)
      if (c.name == name) return c.values;
    throw DataError("table has no column '" + std::string(name) + "'");
  }

  void set_column(const std::string& name, std::vector<double> values) {
    for (auto& c : columns) {
      if (c.name == name) {
        c.values = std::move(values);
        return;
      }
    }
    columns.push_back({name, std::move(values)});
  }

  /// Rows [begin, end).
  TimeTable slice(std::size_t begin, std::size_t end) const {
    TimeTable out;
    out.target_name = target_name;
    out.interval = interval;
    out.timestamps.assign(timestamps.begin() + begin, timestamps.begin() + end);
    out.target.assign(target.begin() + begin, target.begin() + end);
    for (const auto& c : columns)
      out.columns.push_back({c.name, {c.values.begin() + begin, c.values.begin() + end}});
    return out;
  }

  /// Throws DataError when an invariant is broken.
  void validate() const {
    if (interval.count() <= 0) throw DataError("table: sampling interval must be positive");
    if (target.size() != size()) throw DataError("table: target length mismatch");
    for (const auto& c : columns)
      if (c.values.size() != size())
        throw DataError("table: column '" + c.name + "' length mismatch");
    for (std::size_t i = 1; i < size(); ++i) {
      if (timestamps[i] - timestamps[i - 1] != interval) {
        throw DataError("table: irregular spacing at " + format_instant(timestamps[i]));
      }
    }
    const auto check_finite = [](const std::vector<double>& v, const std::string& name) {
      for (std::size_t i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i]))
          throw DataError("table: missing value in '" + name + "' at row " + std::to_string(i));
    };
    check_finite(target, target_name);
    for (const auto& c : columns) check_finite(c.values, c.name);
  }
};

/// Maps CSV header names onto table roles. Only declared columns are read.
struct Schema {
  std::string timestamp = columns::kTimestamp;
  std::string target = columns::kTarget;
  /// csv column name -> table column name
  std::vector<std::pair<std::string, std::string>> features = {
      {columns::kOnOffState, columns::kOnOffState},
      {columns::kOpMode, columns::kOpMode},
      {columns::kOutTemp, columns::kOutTemp},
      {columns::kOutHumid, columns::kOutHumid},
  };
  Seconds interval = kDefaultSampleInterval;
  /// When > 0, every target value must be a multiple of this step.
  double quantization = 0.0;

  /// Text form, one `csv_name = role` pair per line. Roles are `timestamp`,
  /// `target`, or the table column name to store the feature under.
  /// `#` comments allowed.
  static Schema parse(std::istream& in) {
    Schema s;
    s.features.clear();
    bool have_ts = false, have_target = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto eq = line.find('=');
      const auto trim = [](std::string v) {
        const auto a = v.find_first_not_of(" \t\r");
        const auto b = v.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
      };
      if (eq == std::string::npos)
        throw ConfigError("schema line " + std::to_string(line_no) + ": expected name = role");
      const std::string name = trim(line.substr(0, eq));
      const std::string role = trim(line.substr(eq + 1));
      if (name.empty() || role.empty())
        throw ConfigError("schema line " + std::to_string(line_no) + ": empty name or role");
      if (role == "timestamp") {
        s.timestamp = name;
        have_ts = true;
      } else if (role == "target") {
        s.target = name;
        have_target = true;
      } else {
        s.features.emplace_back(name, role);
      }
    }
    if (!have_ts || !have_target)
      throw ConfigError("schema must declare a timestamp and a target column");
    return s;
  }
};

/// Reads a headered CSV into a TimeTable.
inline TimeTable ingest_csv(std::istream& in, const Schema& schema = {}) {
  const auto rows = csv::read(in);
  if (rows.empty()) throw DataError("ingest: missing header row");
  const auto& header = rows.front();
  const auto find = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("ingest: schema error, missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ts_col = find(schema.timestamp);
  const std::size_t target_col = find(schema.target);
  std::vector<std::size_t> feature_cols;
  for (const auto& [csv_name, _] : schema.features) feature_cols.push_back(find(csv_name));
  if (rows.size() == 1) throw DataError("ingest: no data rows");

  struct Record {
    Instant t;
    double target;
    std::vector<double> values;
  };
  std::vector<Record> records;
  records.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "data row " + std::to_string(r) + " (line " + std::to_string(r + 1) + ")";
    if (row.size() != header.size())
      throw DataError("ingest: parse error at " + where + ": expected " +
                      std::to_string(header.size()) + " fields, got " + std::to_string(row.size()));
    Record rec;
    try {
      rec.t = parse_instant(row[ts_col]);
    } catch (const DataError& e) {
      throw DataError("ingest: parse error at " + where + ": " + e.what());
    }
    const auto number = [&](std::size_t col) {
      double v = 0.0;
      if (!csv::parse_number(row[col], v))
        throw DataError("ingest: parse error at " + where + ", column '" + header[col] +
                        "': non-numeric value '" + row[col] + "'");
      return v;
    };
    rec.target = number(target_col);
    for (auto col : feature_cols) rec.values.push_back(number(col));
    records.push_back(std::move(rec));
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const Record& a, const Record& b) { return a.t < b.t; });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].t == records[i - 1].t)
      throw DataError("ingest: integrity error, duplicate timestamp " + format_instant(records[i].t));
    if (records[i].t - records[i - 1].t != schema.interval)
      throw DataError("ingest: integrity error, gap or irregular spacing between " +
                      format_instant(records[i - 1].t) + " and " + format_instant(records[i].t));
  }

  TimeTable table;
  table.interval = schema.interval;
  table.target_name = columns::kTarget;
  for (const auto& [_, name] : schema.features) table.columns.push_back({name, {}});
  for (auto& rec : records) {
    if (schema.quantization > 0.0) {
      const double q = rec.target / schema.quantization;
      if (std::abs(q - std::round(q)) > 1e-9)
        throw DataError("ingest: target " + csv::format_number(rec.target) + " at " +
                        format_instant(rec.t) + " is not a multiple of the quantization step");
    }
    table.timestamps.push_back(rec.t);
    table.target.push_back(rec.target);
    for (std::size_t j = 0; j < rec.values.size(); ++j) table.columns[j].values.push_back(rec.values[j]);
  }
  return table;
}

/// Writes a table in the same CSV layout ingest_csv reads.
inline void write_csv(std::ostream& out, const TimeTable& table) {
  csv::Writer w(out);
  std::vector<std::string> header{columns::kTimestamp};
  for (const auto& c : table.columns) header.push_back(c.name);
  header.push_back(table.target_name);
  w.row(header);
  std::vector<std::string> fields;
  for (std::size_t i = 0; i < table.size(); ++i) {
    fields.clear();
    fields.push_back(format_instant(table.timestamps[i]));
    for (const auto& c : table.columns) fields.push_back(csv::format_number(c.values[i]));
    fields.push_back(csv::format_number(table.target[i]));
    w.row(fields);
  }
}

struct StateEvent {
  Instant at;
  double value;
};

/// Last-observation-carried-forward of state-change events onto a grid.
inline std::vector<double> align_state_change(const std::vector<StateEvent>& events,
                                              const std::vector<Instant>& grid) {
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].at < events[i - 1].at) throw DataError("align: events are not sorted");
  if (grid.empty()) return {};
  if (events.empty() || events.front().at > grid.front())
    throw DataError("align: coverage error, no event at or before " + format_instant(grid.front()));
  std::vector<double> out;
  out.reserve(grid.size());
  std::size_t next = 0;
  double current = events.front().value;
  for (const auto t : grid) {
    while (next < events.size() && events[next].at <= t) current = events[next++].value;
    out.push_back(current);
  }
  return out;
}

/// Reads `timestamp,value` event rows (header required).
inline std::vector<StateEvent> read_events(std::istream& in) {
  const auto rows = csv::read(in);
  if (rows.size() < 2) throw DataError("events: no data rows");
  std::vector<StateEvent> events;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() < 2) throw DataError("events: row " + std::to_string(r) + " has < 2 fields");
    double v = 0.0;
    if (!csv::parse_number(rows[r][1], v))
      throw DataError("events: parse error at data row " + std::to_string(r));
    events.push_back({parse_instant(rows[r][0]), v});
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const StateEvent& a, const StateEvent& b) { return a.at < b.at; });
  return events;
}

/// Calendar boundaries for the chronological train/validation/test split.
/// Every boundary date belongs to the earlier partition.
struct SplitSpec {
  Date data_start = parse_date("2017-12-08");
  Date train_end = parse_date("2019-06-30");
  Date val_end = parse_date("2019-10-10");
  Date data_cutoff = parse_date("2020-02-29");

  void validate() const {
    if (!(data_start < train_end))
      throw ConfigError("split: train_end must be after data_start (empty training partition)");
    if (!(train_end < val_end))
      throw ConfigError("split: val_end must be after train_end (empty validation partition)");
    if (!(val_end < data_cutoff))
      throw ConfigError("split: data_cutoff must be after val_end (empty test partition)");
  }
};

enum class Partition { kTrain, kValidation, kTest, kDropped };

inline Partition partition_of(const SplitSpec& spec, const Date& local_date) {
  if (local_date < spec.data_start || local_date > spec.data_cutoff) return Partition::kDropped;
  if (local_date <= spec.train_end) return Partition::kTrain;
  if (local_date <= spec.val_end) return Partition::kValidation;
  return Partition::kTest;
}

/// Row ranges [begin, end) of each partition inside the source table.
struct SplitRanges {
  std::size_t train_begin = 0, train_end = 0;
  std::size_t val_begin = 0, val_end = 0;
  std::size_t test_begin = 0, test_end = 0;
};

inline SplitRanges split_ranges(const std::vector<Instant>& timestamps, const SplitSpec& spec,
                                const LocalClock& clock = {}) {
  spec.validate();
  SplitRanges r;
  const auto first_at_or_after = [&](const Date& date) {
    const Instant t = clock.midnight(date);
    return static_cast<std::size_t>(std::lower_bound(timestamps.begin(), timestamps.end(), t) -
                                    timestamps.begin());
  };
  const auto next_day = [](const Date& d) { return Date{std::chrono::sys_days{d} + std::chrono::days{1}}; };
  r.train_begin = first_at_or_after(spec.data_start);
  r.train_end = r.val_begin = first_at_or_after(next_day(spec.train_end));
  r.val_end = r.test_begin = first_at_or_after(next_day(spec.val_end));
  r.test_end = first_at_or_after(next_day(spec.data_cutoff));
  const auto require = [](std::size_t a, std::size_t b, const char* name) {
    if (a >= b) throw DataError(std::string("split: empty ") + name + " partition");
  };
  require(r.train_begin, r.train_end, "training");
  require(r.val_begin, r.val_end, "validation");
  require(r.test_begin, r.test_end, "test");
  return r;
}

struct SplitTables {
  TimeTable train;
  TimeTable validation;
  TimeTable test;
};

/// Contiguous chronological partition; rows outside [data_start, data_cutoff]
/// are dropped.
inline SplitTables split(const TimeTable& table, const SplitSpec& spec, const LocalClock& clock = {}) {
  const auto r = split_ranges(table.timestamps, spec, clock);
  return {table.slice(r.train_begin, r.train_end), table.slice(r.val_begin, r.val_end),
          table.slice(r.test_begin, r.test_end)};
}

struct SynthConfig {
  std::uint64_t seed = 42;
  int n_days = 814;
  Date start_date = parse_date("2017-12-08");
  double rt_base = 25.0;        ///< °C
  double seasonal_amp = 4.0;    ///< °C, peak in mid July
  double daily_amp = 1.5;       ///< °C, peak at 15:00 local
  double holiday_shift = 1.0;   ///< °C added on weekends and national holidays
  double noise_sd = 1.5;        ///< stationary sd of the AR(1) deviation, °C
  double noise_ar = 0.995;      ///< AR(1) coefficient per sample
  double quantization = 0.5;    ///< sensor resolution, °C
  Seconds interval = kDefaultSampleInterval;

  void validate() const {
    if (n_days < 1) throw ConfigError("synth: n_days must be >= 1");
    if (!(quantization > 0.0)) throw ConfigError("synth: quantization must be > 0");
    if (!(noise_sd >= 0.0)) throw ConfigError("synth: noise_sd must be >= 0");
    if (!(std::abs(noise_ar) < 1.0)) throw ConfigError("synth: noise_ar must lie in (-1, 1)");
    if (interval.count() <= 0 || 86400 % interval.count() != 0)
      throw ConfigError("synth: interval must divide one day");
  }
};

inline double quantize(double value, double step) { return std::round(value / step) * step; }

/// Seasonal shape in [-1, 1]: minimum mid January, maximum mid July.
inline double seasonal_shape(const LocalFields& f) {
  const auto jan1 = std::chrono::sys_days{f.date.year() / std::chrono::January / 1};
  const double doy = static_cast<double>((std::chrono::sys_days{f.date} - jan1).count()) +
                     (f.hour + f.minute / 60.0) / 24.0;
  return -std::cos(2.0 * std::numbers::pi * (doy - 15.0) / 365.25);
}

/// Daily shape in [-1, 1], maximum at 15:00 local.
inline double daily_shape(const LocalFields& f) {
  const double hour = f.hour + f.minute / 60.0;
  return std::cos(2.0 * std::numbers::pi * (hour - 15.0) / 24.0);
}

/// Schema-compatible synthetic sensor table:
/// RT = base + seasonal + daily + holiday shift + AR(1) deviation, quantized.
inline TimeTable synthesize(const SynthConfig& config,
                            const HolidayCalendar& calendar = HolidayCalendar::greek_default(),
                            const LocalClock& clock = {}) {
  config.validate();
  const auto per_day = static_cast<std::size_t>(86400 / config.interval.count());
  const std::size_t n = per_day * static_cast<std::size_t>(config.n_days);
  Rng rng(config.seed);

  TimeTable t;
  t.interval = config.interval;
  t.timestamps.reserve(n);
  t.target.reserve(n);
  std::vector<double> on_off(n), op_mode(n), out_temp(n), out_humid(n);

  const Instant start = clock.midnight(config.start_date);
  const double rt_innov = config.noise_sd * std::sqrt(1.0 - config.noise_ar * config.noise_ar);
  double rt_dev = config.noise_sd * rng.normal();
  constexpr double kOutAr = 0.99, kOutSd = 2.0;
  constexpr double kHumAr = 0.95, kHumSd = 5.0;
  double out_dev = kOutSd * rng.normal();
  double hum_dev = kHumSd * rng.normal();
  int start_offset_steps = 0;
  Date current_day{};

  for (std::size_t i = 0; i < n; ++i) {
    const Instant ts = start + config.interval * static_cast<std::int64_t>(i);
    const LocalFields f = clock.fields(ts);
    if (i == 0 || f.date != current_day) {
      current_day = f.date;
      // HVAC switches on between 07:00 and 08:00 on working days.
      start_offset_steps = static_cast<int>(rng.index(6));
    }
    const bool holiday = calendar.is_holiday(f.date);
    const double season = seasonal_shape(f);
    const double daily = daily_shape(f);

    if (i > 0) {
      rt_dev = config.noise_ar * rt_dev + rt_innov * rng.normal();
      out_dev = kOutAr * out_dev + kOutSd * std::sqrt(1.0 - kOutAr * kOutAr) * rng.normal();
      hum_dev = kHumAr * hum_dev + kHumSd * std::sqrt(1.0 - kHumAr * kHumAr) * rng.normal();
    }
    const double rt = config.rt_base + config.seasonal_amp * season + config.daily_amp * daily +
                      (holiday ? config.holiday_shift : 0.0) + rt_dev;

    const int minute_of_day = f.hour * 60 + f.minute;
    const int on_from = 7 * 60 + start_offset_steps * 10;
    on_off[i] = (!holiday && minute_of_day >= on_from && minute_of_day < 19 * 60) ? 1.0 : 0.0;
    op_mode[i] = (f.month >= 5 && f.month <= 9) ? 2.0 : (f.month == 4 || f.month == 10) ? 0.0 : 1.0;
    out_temp[i] = 18.0 + 9.0 * season + 5.0 * daily + out_dev;
    out_humid[i] = std::clamp(60.0 - 1.8 * (out_temp[i] - 18.0) + hum_dev, 5.0, 100.0);

    t.timestamps.push_back(ts);
    t.target.push_back(quantize(rt, config.quantization));
  }
  t.columns = {{columns::kOnOffState, std::move(on_off)},
               {columns::kOpMode, std::move(op_mode)},
               {columns::kOutTemp, std::move(out_temp)},
               {columns::kOutHumid, std::move(out_humid)}};
  return t;
}

}  // namespace roomcast
