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

#include <set>
#include <sstream>

#include "test_util.hpp"

namespace roomcast {
namespace {

using namespace std::chrono_literals;
using testing::at;

TEST(Time, ParsesOffsetsAndFormatsUtc) {
  EXPECT_EQ(format_instant(at("2019-07-06T14:00:00+02:00")), "2019-07-06T12:00:00Z");
  EXPECT_EQ(format_instant(at("2019-07-06T12:00")), "2019-07-06T12:00:00Z");
  EXPECT_EQ(at("2019-07-06T12:00:00Z"), at("2019-07-06T07:30:00-04:30"));
  EXPECT_THROW(parse_instant("2019-13-01T00:00:00Z"), DataError);
  EXPECT_THROW(parse_instant("yesterday"), DataError);
}

TEST(Time, LocalClockUsesFixedOffset) {
  const LocalClock clock;
  const auto f = clock.fields(at("2019-12-31T22:10:00Z"));
  EXPECT_EQ(format_date(f.date), "2020-01-01");
  EXPECT_EQ(f.hour, 0);
  EXPECT_EQ(f.minute, 10);
  EXPECT_EQ(clock.midnight(parse_date("2020-01-01")), at("2019-12-31T22:00:00Z"));
}

TEST(Csv, QuotedFieldsAndCrlf) {
  std::istringstream in("a,b\r\n\"x,1\",\"say \"\"hi\"\"\"\r\n2,3\n");
  const auto rows = csv::read(in);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][0], "x,1");
  EXPECT_EQ(rows[1][1], "say \"hi\"");
  EXPECT_EQ(rows[2][1], "3");
  EXPECT_EQ(csv::quote("a\"b"), "\"a\"\"b\"");
}

TEST(Csv, NumbersRoundTrip) {
  for (double v : {0.0, 0.1, -2.5, 1e-300, 24.999999999999996, 117216.0}) {
    double back = 1.0;
    ASSERT_TRUE(csv::parse_number(csv::format_number(v), back));
    EXPECT_EQ(back, v);
  }
  double v = 0.0;
  EXPECT_FALSE(csv::parse_number("1,5", v));
  EXPECT_FALSE(csv::parse_number("", v));
}

TEST(Calendar, WeekendsAndListedDates) {
  const auto cal = HolidayCalendar::greek_default();
  EXPECT_TRUE(cal.is_holiday(parse_date("2019-07-06")));   // Saturday
  EXPECT_FALSE(cal.is_holiday(parse_date("2019-07-03")));  // Wednesday
  EXPECT_TRUE(cal.is_holiday(parse_date("2019-10-28")));   // Monday, listed
  std::istringstream in("# comment\n2019-07-02\n\n");
  const auto custom = HolidayCalendar::parse(in);
  EXPECT_TRUE(custom.is_holiday(parse_date("2019-07-02")));  // Tuesday, listed
  std::istringstream bad("2019-02-30\n");
  EXPECT_THROW(HolidayCalendar::parse(bad), Error);
}

std::string three_rows() {
  return "timestamp,OnOffState,OpMode,OutTemp,OutHumid,RT\n"
         "2019-07-01T00:00:00Z,0,2,20.5,60,24.5\n"
         "2019-07-01T00:10:00Z,1,2,20.4,61,25\n"
         "2019-07-01T00:20:00Z,1,2,20.3,62,25.5\n";
}

TEST(Ingest, WellFormedThreeRows) {
  std::istringstream in(three_rows());
  const auto t = ingest_csv(in);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t.target, (std::vector<double>{24.5, 25.0, 25.5}));
  EXPECT_EQ(t.column(columns::kOutHumid), (std::vector<double>{60, 61, 62}));
  EXPECT_NO_THROW(t.validate());
}

TEST(Ingest, HeaderOnlyIsAnError) {
  std::istringstream in("timestamp,OnOffState,OpMode,OutTemp,OutHumid,RT\n");
  EXPECT_THROW(ingest_csv(in), DataError);
}

TEST(Ingest, DuplicateTimestampNamed) {
  std::istringstream in(three_rows() + "2019-07-01T00:20:00Z,1,2,20.3,62,25.5\n");
  try {
    ingest_csv(in);
    FAIL() << "expected an integrity error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("2019-07-01T00:20:00Z"), std::string::npos) << e.what();
  }
}

TEST(Ingest, ReportsBadCellsGapsAndMissingColumns) {
  std::istringstream bad(three_rows() + "2019-07-01T00:30:00Z,1,2,x,62,25.5\n");
  try {
    ingest_csv(bad);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("data row 4"), std::string::npos) << e.what();
  }
  std::istringstream gap(three_rows() + "2019-07-01T00:50:00Z,1,2,20,62,25.5\n");
  EXPECT_THROW(ingest_csv(gap), DataError);
  std::istringstream missing("timestamp,RT\n2019-07-01T00:00:00Z,1\n");
  EXPECT_THROW(ingest_csv(missing), DataError);
}

TEST(Ingest, SchemaMappingAndQuantization) {
  std::istringstream schema_text("time = timestamp\ntemp_in = target\nhvac = OnOffState\n");
  const auto schema = Schema::parse(schema_text);
  std::istringstream in("time,hvac,temp_in\n2019-07-01T00:00:00Z,1,24.5\n2019-07-01T00:10:00Z,0,24.7\n");
  const auto t = ingest_csv(in, schema);
  EXPECT_EQ(t.column(columns::kOnOffState), (std::vector<double>{1, 0}));
  Schema strict = schema;
  strict.quantization = 0.5;
  std::istringstream again("time,hvac,temp_in\n2019-07-01T00:00:00Z,1,24.5\n2019-07-01T00:10:00Z,0,24.7\n");
  EXPECT_THROW(ingest_csv(again, strict), DataError);
  std::istringstream no_target("time = timestamp\n");
  EXPECT_THROW(Schema::parse(no_target), ConfigError);
}

TEST(Ingest, WriteThenReadIsIdentity) {
  SynthConfig cfg;
  cfg.n_days = 2;
  const auto t = synthesize(cfg);
  std::ostringstream out;
  write_csv(out, t);
  std::istringstream in(out.str());
  const auto back = ingest_csv(in);
  EXPECT_EQ(back.timestamps, t.timestamps);
  EXPECT_EQ(back.target, t.target);
  for (const auto& c : t.columns) EXPECT_EQ(back.column(c.name), c.values) << c.name;
}

TEST(Align, SingleEventCarriedForward) {
  const auto t0 = at("2019-07-01T00:00:00Z");
  const std::vector<Instant> grid{t0, t0 + 10min, t0 + 20min};
  EXPECT_EQ(align_state_change({{t0, 20.0}}, grid), (std::vector<double>{20, 20, 20}));
}

TEST(Align, ChangeTakesEffectAtNextGridInstant) {
  const auto t0 = at("2019-07-01T00:00:00Z");
  const std::vector<Instant> grid{t0, t0 + 10min, t0 + 20min};
  EXPECT_EQ(align_state_change({{t0, 20.0}, {t0 + 15min, 25.0}}, grid), (std::vector<double>{20, 20, 25}));
}

TEST(Align, CoverageError) {
  const auto t0 = at("2019-07-01T00:00:00Z");
  EXPECT_THROW(align_state_change({{t0 + 5min, 20.0}}, {t0, t0 + 10min}), DataError);
}

TEST(Align, PiecewiseConstantBetweenEvents) {
  Rng rng(7);
  const auto t0 = at("2019-07-01T00:00:00Z");
  std::vector<StateEvent> events{{t0, 0.0}};
  for (int i = 0; i < 40; ++i)
    events.push_back({events.back().at + Seconds{60 + 60 * static_cast<long>(rng.index(60))},
                      static_cast<double>(rng.index(3))});
  std::vector<Instant> grid;
  for (int i = 0; i < 300; ++i) grid.push_back(t0 + 10min * i);
  const auto v = align_state_change(events, grid);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (v[i] == v[i - 1]) continue;
    const bool event_in_between = std::any_of(events.begin(), events.end(), [&](const StateEvent& e) {
      return e.at > grid[i - 1] && e.at <= grid[i];
    });
    EXPECT_TRUE(event_in_between) << "value changed at grid index " << i << " without an event";
  }
}

TEST(Split, DefaultDatesGiveExpectedDayCounts) {
  const auto& t = testing::seed42_table();
  const auto parts = split(t, SplitSpec{});
  EXPECT_EQ(parts.train.size(), 570u * 144u);
  EXPECT_EQ(parts.validation.size(), 102u * 144u);
  EXPECT_EQ(parts.test.size(), 142u * 144u);
  // boundary date belongs to the earlier set
  const LocalClock clock;
  EXPECT_EQ(format_date(clock.local_date(parts.train.timestamps.back())), "2019-06-30");
  EXPECT_EQ(format_date(clock.local_date(parts.validation.timestamps.front())), "2019-07-01");
  EXPECT_EQ(format_date(clock.local_date(parts.validation.timestamps.back())), "2019-10-10");
}

TEST(Split, IsAPartitionOfTheTruncatedInput) {
  const auto& t = testing::seed42_table();
  SplitSpec spec;
  spec.data_start = parse_date("2018-03-01");
  spec.data_cutoff = parse_date("2020-01-31");
  const auto parts = split(t, spec);
  std::vector<Instant> joined;
  for (const auto* p : {&parts.train, &parts.validation, &parts.test})
    joined.insert(joined.end(), p->timestamps.begin(), p->timestamps.end());
  const LocalClock clock;
  std::vector<Instant> expected;
  for (auto ts : t.timestamps) {
    const auto d = clock.local_date(ts);
    if (!(d < spec.data_start) && !(spec.data_cutoff < d)) expected.push_back(ts);
  }
  EXPECT_EQ(joined, expected);
  EXPECT_EQ(std::set<Instant>(joined.begin(), joined.end()).size(), joined.size());
}

TEST(Split, EmptyTrainingPartitionRejected) {
  SplitSpec spec;
  spec.train_end = spec.data_start;
  EXPECT_THROW(split(testing::seed42_table(), spec), ConfigError);
}

TEST(Synth, DeterministicForAGivenSeed) {
  SynthConfig cfg;
  cfg.n_days = 30;
  const auto a = synthesize(cfg), b = synthesize(cfg);
  EXPECT_EQ(a.target, b.target);
  for (const auto& c : a.columns) EXPECT_EQ(b.column(c.name), c.values);
  cfg.seed = 43;
  EXPECT_NE(synthesize(cfg).target, a.target);
}

TEST(Synth, ShapeAndQuantization) {
  SynthConfig cfg;
  cfg.n_days = 10;
  const auto t = synthesize(cfg);
  EXPECT_EQ(t.size(), 1440u);
  EXPECT_NO_THROW(t.validate());
  for (double v : t.target) EXPECT_EQ(std::fmod(v, 0.5), 0.0);
  EXPECT_EQ(t.timestamps.front(), LocalClock{}.midnight(cfg.start_date));
  EXPECT_THROW(synthesize(SynthConfig{.n_days = 0}), ConfigError);
}

TEST(Synth, NoiseFreeIsTheQuantizedDeterministicShape) {
  SynthConfig cfg;
  cfg.n_days = 3;
  cfg.noise_sd = 0.0;
  cfg.holiday_shift = 0.0;
  const auto t = synthesize(cfg);
  const LocalClock clock;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto f = clock.fields(t.timestamps[i]);
    const double expected = quantize(cfg.rt_base + cfg.seasonal_amp * seasonal_shape(f) +
                                         cfg.daily_amp * daily_shape(f), cfg.quantization);
    ASSERT_EQ(t.target[i], expected) << i;
  }
}

TEST(Synth, PersistentButDifferenceStationary) {
  SynthConfig cfg;
  cfg.n_days = 365;
  const auto t = synthesize(cfg);
  EXPECT_GT(stats::acf(t.target, 1)[1], 0.9);
  std::vector<double> diff(t.size() - 1);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) diff[i] = t.target[i + 1] - t.target[i];
  EXPECT_TRUE(stats::adf_test(diff).reject_at[0]);
}

}  // namespace
}  // namespace roomcast
