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

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace roomcast {
namespace {

using testing::at;

TimeTable table_at(std::vector<Instant> ts, std::vector<double> target = {}) {
  TimeTable t;
  t.timestamps = std::move(ts);
  t.target = target.empty() ? std::vector<double>(t.timestamps.size(), 0.0) : std::move(target);
  return t;
}

TEST(MovingAverage, HandComputedAndEdgeCases) {
  const std::vector<double> ramp{1, 2, 3, 4};
  EXPECT_EQ(moving_average(ramp, 2), (std::vector<double>{1, 1.5, 2.5, 3.5}));
  EXPECT_EQ(moving_average(std::vector<double>{5, 5, 5, 5}, 3), (std::vector<double>{5, 5, 5, 5}));
  EXPECT_EQ(moving_average(ramp, 1), ramp);
  EXPECT_THROW(moving_average(ramp, 0), ConfigError);
}

TEST(MovingAverage, LinearAndBoundedOnRandomSeries) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + rng.index(60), w = 1 + rng.index(10);
    std::vector<double> x(n), y(n), combo(n);
    const double a = rng.uniform() * 4 - 2, b = rng.uniform() * 4 - 2;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal();
      y[i] = rng.normal();
      combo[i] = a * x[i] + b * y[i];
    }
    const auto mx = moving_average(x, w), my = moving_average(y, w), mc = moving_average(combo, w);
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(mc[i], a * mx[i] + b * my[i], 1e-12);
      EXPECT_GE(mx[i], *lo - 1e-15);
      EXPECT_LE(mx[i], *hi + 1e-15);
    }
  }
}

TEST(TimeFeatures, CalendarArithmetic) {
  auto t = add_time_features(table_at({at("2019-07-06T12:00:00Z"), at("2019-12-31T22:00:00Z")}));
  EXPECT_EQ(t.column(features::kQuarter), (std::vector<double>{3, 1}));
  EXPECT_EQ(t.column(features::kMonth), (std::vector<double>{7, 1}));
  EXPECT_EQ(t.column(features::kWeekDay)[0], 6.0);  // Saturday, ISO numbering
  EXPECT_EQ(t.column(features::kHour), (std::vector<double>{14, 0}));
  EXPECT_FALSE(t.has_column("Year"));
}

TEST(TimeFeatures, QuarterAgreesWithMonthEverywhere) {
  std::vector<Instant> ts;
  for (int d = 0; d < 800; d += 3) ts.push_back(at("2018-01-01T00:00:00Z") + std::chrono::days{d} + std::chrono::hours{d % 24});
  const auto t = add_time_features(table_at(ts));
  const auto& q = t.column(features::kQuarter);
  const auto& m = t.column(features::kMonth);
  for (std::size_t i = 0; i < ts.size(); ++i) EXPECT_EQ(q[i], std::floor((m[i] - 1) / 3) + 1);
}

TEST(Holiday, WeekendsListedDatesAndWorkdays) {
  auto t = add_holiday(table_at({at("2019-07-06T10:00:00Z"), at("2019-07-03T10:00:00Z"), at("2019-10-28T10:00:00Z")}),
                       HolidayCalendar::greek_default());
  EXPECT_EQ(t.column(features::kHoliday), (std::vector<double>{1, 0, 1}));
  std::istringstream listed("2019-07-02\n");
  auto custom = add_holiday(table_at({at("2019-07-02T10:00:00Z")}), HolidayCalendar::parse(listed));
  EXPECT_EQ(custom.column(features::kHoliday)[0], 1.0);
}

TEST(Holiday, EverySaturdayAndSundayFlagged) {
  const auto& t = testing::seed42_table();
  const auto e = add_holiday(add_time_features(t), HolidayCalendar::greek_default());
  const auto& wd = e.column(features::kWeekDay);
  const auto& h = e.column(features::kHoliday);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (wd[i] >= 6) {
      ASSERT_EQ(h[i], 1.0) << format_instant(t.timestamps[i]);
    }
  }
}

TEST(Occupancy, RequiresOnStateWorkdayAndHours) {
  TimeTable t = table_at({at("2019-07-02T08:00:00Z"), at("2019-07-07T08:00:00Z"), at("2019-07-02T08:00:00Z")});
  t.set_column(columns::kOnOffState, {1, 1, 0});
  t = add_occupancy(add_holiday(add_time_features(t), HolidayCalendar::greek_default()));
  EXPECT_EQ(t.column(features::kOccupancy), (std::vector<double>{1, 0, 0}));
  EXPECT_THROW(add_occupancy(table_at({at("2019-07-02T08:00:00Z")})), ConfigError);
}

TEST(Mvart, OracleHandComputed) {
  const std::vector<double> rt{20, 21, 22, 23, 24, 25, 26};
  const auto m = oracle_mvart(rt, 6);
  EXPECT_DOUBLE_EQ(m[6], 22.5);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_TRUE(std::isnan(m[i]));
  const auto flat = oracle_mvart(std::vector<double>(20, 22.0), 6);
  for (std::size_t i = 6; i < 20; ++i) EXPECT_EQ(flat[i], 22.0);
}

TEST(Mvart, RollingWithTruthAsPredictionsMatchesOracle) {
  Rng rng(3);
  std::vector<double> rt(200);
  for (auto& v : rt) v = 20 + rng.normal();
  const std::vector<std::size_t> anchors{10, 60, 110, 160};
  const auto rolling = rolling_mvart(rt, rt, anchors, 6);
  const auto oracle = oracle_mvart(rt, 6);
  for (std::size_t t = 6; t < rt.size(); ++t) EXPECT_EQ(rolling[t], oracle[t]);
}

TEST(Mvart, RollingUsesPredictionsAfterTheAnchor) {
  const std::vector<double> rt{1, 1, 1, 1, 1, 1};
  const std::vector<double> pred{9, 9, 9, 9, 9, 9};
  const std::vector<std::size_t> anchors{2};
  const auto m = rolling_mvart(rt, pred, anchors, 2);
  EXPECT_EQ(m[3], 1.0);  // window {1, 2}, both observed
  EXPECT_EQ(m[4], 5.0);  // {2 observed, 3 predicted}
  EXPECT_EQ(m[5], 9.0);
}

TEST(Mvart, OracleHasNoLookAhead) {
  Rng rng(5);
  std::vector<double> rt(100);
  for (auto& v : rt) v = rng.normal();
  const auto base = oracle_mvart(rt, 6);
  for (std::size_t t : {0u, 17u, 50u, 99u}) {
    auto perturbed = rt;
    perturbed[t] += 100.0;
    const auto m = oracle_mvart(perturbed, 6);
    for (std::size_t k = 6; k <= t; ++k) EXPECT_EQ(m[k], base[k]) << "t=" << t << " k=" << k;
  }
}

TEST(Selection, ParsesLabelsAndRejectsConflicts) {
  const auto s = FeatureSelection::parse("IOTS-MVA+MVART, Holiday");
  EXPECT_TRUE(s.iots_mva && s.mvart && s.holiday && !s.iots);
  EXPECT_EQ(s.label(), "IOTS-MVA+MVART+Holiday");
  EXPECT_THROW(FeatureSelection::parse("IOTS,IOTS-MVA").validate(), ConfigError);
  EXPECT_THROW(FeatureSelection::parse("Weather"), ConfigError);
  EXPECT_THROW(FeatureSelection::parse("").validate(), ConfigError);
}

TEST(DesignMatrix, IotsOnlyHasNoHistoryOrHoliday) {
  SynthConfig cfg;
  cfg.n_days = 5;
  const auto m = build_design_matrix(synthesize(cfg), EngineeringConfig{}, FeatureSelection::parse("IOTS"));
  EXPECT_FALSE(m.find(features::kMvart));
  EXPECT_FALSE(m.find(features::kHoliday));
  EXPECT_EQ(m.rows(), 720u);
}

TEST(DesignMatrix, FullSelectionHasElevenCanonicalColumns) {
  SynthConfig cfg;
  cfg.n_days = 5;
  const auto t = synthesize(cfg);
  const auto m = build_design_matrix(t, EngineeringConfig{}, FeatureSelection::all());
  const std::vector<std::string> expected{"OnOffState", "OpMode",   "Quarter",  "Month",   "WeekDay", "Hour",
                                          "Occupancy",  "Holiday", "OutHumid", "OutTemp", "MVART"};
  EXPECT_EQ(m.feature_names, expected);
  EXPECT_EQ(m.rows(), t.size() - 6);
  EXPECT_EQ(m.source_offset, 6u);
  for (double v : m.values) ASSERT_TRUE(std::isfinite(v));
  for (const auto& n : m.feature_names) EXPECT_TRUE(n != "SetpointTemperature" && n != "Year");
  // IOTS-MVA smooths the outdoor columns with the configured window
  const auto smooth = moving_average(t.column(columns::kOutTemp), 6);
  EXPECT_EQ(m.at(0, m.index_of("OutTemp")), smooth[6]);
  EXPECT_EQ(m.at(0, m.index_of("MVART")), oracle_mvart(t.target, 6)[6]);
  EXPECT_EQ(m.target[0], t.target[6]);
}

TEST(DesignMatrix, DeterministicOnTheDefaultPipeline) {
  const auto& t = testing::seed42_table();
  const auto a = build_design_matrix(t, EngineeringConfig{}, FeatureSelection::all());
  const auto b = build_design_matrix(t, EngineeringConfig{}, FeatureSelection::all());
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.target, b.target);
}

TEST(DesignMatrix, MissingColumnIsADataError) {
  TimeTable t = table_at({at("2019-07-02T08:00:00Z"), at("2019-07-02T08:10:00Z")});
  EXPECT_THROW(build_design_matrix(t, EngineeringConfig{}, FeatureSelection::parse("IOTS")), DataError);
  EXPECT_NO_THROW(build_design_matrix(t, EngineeringConfig{}, FeatureSelection::parse("Holiday")));
}

}  // namespace
}  // namespace roomcast
