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
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "roomcast/calendar.hpp"
#include "roomcast/common.hpp"
#include "roomcast/dataio.hpp"

namespace roomcast {

namespace features {
inline constexpr const char* kQuarter = "Quarter";
inline constexpr const char* kMonth = "Month";
inline constexpr const char* kWeekDay = "WeekDay";
inline constexpr const char* kHour = "Hour";
inline constexpr const char* kOccupancy = "Occupancy";
inline constexpr const char* kHoliday = "Holiday";
inline constexpr const char* kMvart = "MVART";

/// Column order of every design matrix.
inline const std::vector<std::string>& canonical_order() {
  static const std::vector<std::string> order = {
      columns::kOnOffState, columns::kOpMode, kQuarter,          kMonth,
      kWeekDay,             kHour,            kOccupancy,        kHoliday,
      columns::kOutHumid,   columns::kOutTemp, kMvart};
  return order;
}

/// Features whose values are discrete levels rather than measurements.
inline bool is_categorical(std::string_view name) {
  return name == columns::kOnOffState || name == columns::kOpMode || name == kQuarter ||
         name == kMonth || name == kWeekDay || name == kHour || name == kOccupancy ||
         name == kHoliday;
}
}  // namespace features

enum class MvartMode { kOracle, kRolling };

struct EngineeringConfig {
  std::size_t mva_window = 6;      ///< samples (1 h at 10-min sampling)
  std::size_t horizon_steps = 48;  ///< samples (8 h)
  HolidayCalendar holidays = HolidayCalendar::greek_default();
  MvartMode mvart_mode = MvartMode::kOracle;
  LocalClock clock;
  int work_start_hour = 8;  ///< occupancy window start, inclusive
  int work_end_hour = 18;   ///< occupancy window end, exclusive

  void validate() const {
    if (mva_window < 1) throw ConfigError("features: mva_window must be >= 1");
    if (horizon_steps < 1) throw ConfigError("features: horizon_steps must be >= 1");
    if (work_start_hour < 0 || work_end_hour > 24 || work_start_hour >= work_end_hour)
      throw ConfigError("features: invalid working hours");
  }
};

/// Feature groups that can be combined into a design matrix.
struct FeatureSelection {
  bool iots = false;      ///< system states, raw outdoor weather, calendar, occupancy
  bool iots_mva = false;  ///< as iots, outdoor weather smoothed by the MVA filter
  bool mvart = false;     ///< moving-averaged historical room temperature
  bool holiday = false;   ///< weekend / national-holiday indicator

  static FeatureSelection all() { return {false, true, true, true}; }

  /// Parses group names (`IOTS`, `IOTS-MVA`, `MVART`, `Holiday`), separated by
  /// commas or `+`.
  static FeatureSelection parse(std::string_view text) {
    FeatureSelection s;
    std::string token;
    const auto flush = [&] {
      const auto a = token.find_first_not_of(" \t");
      const auto b = token.find_last_not_of(" \t");
      const std::string name = a == std::string::npos ? "" : token.substr(a, b - a + 1);
      token.clear();
      if (name.empty()) return;
      if (name == "IOTS") s.iots = true;
      else if (name == "IOTS-MVA") s.iots_mva = true;
      else if (name == "MVART") s.mvart = true;
      else if (name == "Holiday") s.holiday = true;
      else throw ConfigError("unknown feature group '" + name + "' (expected IOTS, IOTS-MVA, MVART, Holiday)");
    };
    for (char c : text) {
      if (c == ',' || c == '+') flush();
      else token.push_back(c);
    }
    flush();
    s.validate();
    return s;
  }

  void validate() const {
    if (iots && iots_mva) throw ConfigError("feature groups IOTS and IOTS-MVA are mutually exclusive");
    if (!iots && !iots_mva && !mvart && !holiday) throw ConfigError("empty feature selection");
  }

  std::string label() const {
    std::string out;
    const auto add = [&](bool on, const char* name) {
      if (!on) return;
      if (!out.empty()) out += '+';
      out += name;
    };
    add(iots, "IOTS");
    add(iots_mva, "IOTS-MVA");
    add(mvart, "MVART");
    add(holiday, "Holiday");
    return out;
  }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> out;
    for (const auto& name : features::canonical_order()) {
      const bool exogenous = name != features::kHoliday && name != features::kMvart;
      if ((exogenous && (iots || iots_mva)) || (name == features::kHoliday && holiday) ||
          (name == features::kMvart && mvart)) {
        out.push_back(name);
      }
    }
    return out;
  }
};

/// Dense row-major design matrix with aligned target and timestamps.
struct FeatureMatrix {
  std::vector<std::string> feature_names;
  std::vector<double> values;
  std::vector<double> target;
  std::vector<Instant> timestamps;
  /// Row index in the source table of the first matrix row.
  std::size_t source_offset = 0;

  std::size_t rows() const { return target.size(); }
  std::size_t cols() const { return feature_names.size(); }

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols(), cols()}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols(), cols()}; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * cols() + j]; }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t j = 0; j < feature_names.size(); ++j)
      if (feature_names[j] == name) return j;
    return std::nullopt;
  }

  std::size_t index_of(std::string_view name) const {
    if (auto j = find(name)) return *j;
    throw ConfigError("unknown feature '" + std::string(name) + "'");
  }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> out(rows());
    for (std::size_t i = 0; i < rows(); ++i) out[i] = at(i, j);
    return out;
  }

  /// Rows [begin, end).
  FeatureMatrix slice(std::size_t begin, std::size_t end) const {
    FeatureMatrix out;
    out.feature_names = feature_names;
    out.values.assign(values.begin() + begin * cols(), values.begin() + end * cols());
    out.target.assign(target.begin() + begin, target.begin() + end);
    out.timestamps.assign(timestamps.begin() + begin, timestamps.begin() + end);
    out.source_offset = source_offset + begin;
    return out;
  }

  /// Per-column arithmetic means.
  std::vector<double> column_means() const {
    std::vector<CompensatedSum> sums(cols());
    for (std::size_t i = 0; i < rows(); ++i)
      for (std::size_t j = 0; j < cols(); ++j) sums[j].add(at(i, j));
    std::vector<double> out(cols());
    for (std::size_t j = 0; j < cols(); ++j)
      out[j] = rows() ? sums[j].value() / static_cast<double>(rows()) : 0.0;
    return out;
  }
};

/// Trailing (causal) moving average; warm-up entries average what is available.
inline std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
  if (window == 0) throw ConfigError("moving_average: window must be >= 1");
  std::vector<double> out(series.size());
  // Direct summation per output keeps the result exactly linear and bounded.
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::size_t begin = i + 1 >= window ? i + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t k = begin; k <= i; ++k) sum += series[k];
    out[i] = sum / static_cast<double>(i + 1 - begin);
  }
  return out;
}

/// Adds Quarter, Month, WeekDay (Monday = 1) and Hour in local time.
/// Year is deliberately not produced.
inline TimeTable add_time_features(TimeTable table, const LocalClock& clock = {}) {
  const std::size_t n = table.size();
  std::vector<double> quarter(n), month(n), weekday(n), hour(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto f = clock.fields(table.timestamps[i]);
    quarter[i] = f.quarter;
    month[i] = f.month;
    weekday[i] = f.weekday;
    hour[i] = f.hour;
  }
  table.set_column(features::kQuarter, std::move(quarter));
  table.set_column(features::kMonth, std::move(month));
  table.set_column(features::kWeekDay, std::move(weekday));
  table.set_column(features::kHour, std::move(hour));
  return table;
}

inline TimeTable add_holiday(TimeTable table, const HolidayCalendar& calendar,
                             const LocalClock& clock = {}) {
  std::vector<double> holiday(table.size());
  for (std::size_t i = 0; i < table.size(); ++i)
    holiday[i] = calendar.is_holiday(clock.local_date(table.timestamps[i])) ? 1.0 : 0.0;
  table.set_column(features::kHoliday, std::move(holiday));
  return table;
}

/// Occupancy = system on, working day, within working hours.
inline TimeTable add_occupancy(TimeTable table, int work_start_hour = 8, int work_end_hour = 18) {
  for (const char* dep : {columns::kOnOffState, features::kHour, features::kHoliday})
    if (!table.has_column(dep))
      throw ConfigError(std::string("add_occupancy: missing dependency column '") + dep + "'");
  const auto& on = table.column(columns::kOnOffState);
  const auto& hour = table.column(features::kHour);
  const auto& holiday = table.column(features::kHoliday);
  std::vector<double> occ(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    occ[i] = (on[i] == 1.0 && holiday[i] == 0.0 && hour[i] >= work_start_hour &&
              hour[i] < work_end_hour)
                 ? 1.0
                 : 0.0;
  }
  table.set_column(features::kOccupancy, std::move(occ));
  return table;
}

/// MVART from strictly past true values: mean of target[t-window .. t-1].
/// Warm-up rows (t < window) are NaN.
inline std::vector<double> oracle_mvart(std::span<const double> target, std::size_t window) {
  if (window == 0) throw ConfigError("mvart: window must be >= 1");
  std::vector<double> out(target.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t t = window; t < target.size(); ++t) {
    double sum = 0.0;
    for (std::size_t k = t - window; k < t; ++k) sum += target[k];
    out[t] = sum / static_cast<double>(window);
  }
  return out;
}

/// MVART when true values are only known up to the latest anchor.
///
/// For row t the governing anchor is the largest anchor index < t. Window
/// entries at or before it use the true target; later entries use
/// `predictions`. Rows with no governing anchor fall back to true values.
inline std::vector<double> rolling_mvart(std::span<const double> target,
                                         std::span<const double> predictions,
                                         std::span<const std::size_t> anchors, std::size_t window) {
  if (window == 0) throw ConfigError("mvart: window must be >= 1");
  if (predictions.size() != target.size())
    throw ConfigError("mvart: predictions must align with the target");
  if (!std::is_sorted(anchors.begin(), anchors.end()))
    throw ConfigError("mvart: anchors must be sorted");
  std::vector<double> out(target.size(), std::numeric_limits<double>::quiet_NaN());
  std::size_t next_anchor = 0;
  std::optional<std::size_t> anchor;
  for (std::size_t t = 0; t < target.size(); ++t) {
    while (next_anchor < anchors.size() && anchors[next_anchor] < t) anchor = anchors[next_anchor++];
    if (t < window) continue;
    double sum = 0.0;
    for (std::size_t k = t - window; k < t; ++k) {
      const bool observed = !anchor || k <= *anchor;
      const double v = observed ? target[k] : predictions[k];
      if (!observed && std::isnan(v))
        throw ConfigError("mvart: missing self-prediction at row " + std::to_string(k));
      sum += v;
    }
    out[t] = sum / static_cast<double>(window);
  }
  return out;
}

/// Adds the MVART column. Oracle mode when `rolling` is empty.
struct RollingMvartInputs {
  std::span<const double> predictions;
  std::span<const std::size_t> anchors;
};

inline TimeTable add_mvart(TimeTable table, const EngineeringConfig& config,
                           std::optional<RollingMvartInputs> rolling = std::nullopt) {
  if (config.mvart_mode == MvartMode::kRolling && !rolling)
    throw ConfigError("add_mvart: rolling mode requires self-predictions and anchors");
  auto values = config.mvart_mode == MvartMode::kRolling
                    ? rolling_mvart(table.target, rolling->predictions, rolling->anchors, config.mva_window)
                    : oracle_mvart(table.target, config.mva_window);
  table.set_column(features::kMvart, std::move(values));
  return table;
}

/// Every engineered column for a selection, full table length.
inline TimeTable engineer(TimeTable table, const EngineeringConfig& config,
                          const FeatureSelection& selection) {
  config.validate();
  selection.validate();
  for (const char* dep : {columns::kOnOffState, columns::kOpMode, columns::kOutTemp, columns::kOutHumid})
    if ((selection.iots || selection.iots_mva) && !table.has_column(dep))
      throw DataError(std::string("features: table lacks required column '") + dep + "'");
  table = add_time_features(std::move(table), config.clock);
  table = add_holiday(std::move(table), config.holidays, config.clock);
  if (table.has_column(columns::kOnOffState))
    table = add_occupancy(std::move(table), config.work_start_hour, config.work_end_hour);
  if (selection.iots_mva) {
    for (const char* name : {columns::kOutTemp, columns::kOutHumid})
      table.set_column(name, moving_average(table.column(name), config.mva_window));
  }
  if (selection.mvart) {
    EngineeringConfig oracle = config;
    oracle.mvart_mode = MvartMode::kOracle;
    table = add_mvart(std::move(table), oracle);
  }
  return table;
}

/// Builds the model input matrix. Targets align with their own row's
/// timestamp; multi-step forecasting is done by recursion. With MVART
/// selected the first `mva_window` warm-up rows are dropped unless
/// `drop_warmup` is false (their MVART is then NaN).
inline FeatureMatrix build_design_matrix(const TimeTable& table, const EngineeringConfig& config,
                                         const FeatureSelection& selection, bool drop_warmup = true) {
  const TimeTable eng = engineer(table, config, selection);
  FeatureMatrix m;
  m.feature_names = selection.feature_names();
  const std::size_t skip = (selection.mvart && drop_warmup) ? std::min(config.mva_window, eng.size()) : 0;
  const std::size_t n = eng.size() - skip;
  std::vector<const std::vector<double>*> cols;
  for (const auto& name : m.feature_names) cols.push_back(&eng.column(name));
  m.values.resize(n * m.cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) m.values[i * m.cols() + j] = (*cols[j])[i + skip];
  m.target.assign(eng.target.begin() + skip, eng.target.end());
  m.timestamps.assign(eng.timestamps.begin() + skip, eng.timestamps.end());
  m.source_offset = skip;
  return m;
}

}  // namespace roomcast
