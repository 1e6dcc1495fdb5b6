#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "cci/event_model.hpp"
#include "cci/rng.hpp"

namespace {

using namespace cci;
using namespace std::chrono;

SensorEvent on(const std::string& ts, const std::string& id = "M1", Location loc = Location::kKitchen) {
  SensorEvent e;
  e.timestamp = *parse_timestamp(ts);
  e.sensor_id = id;
  e.type = SensorType::kMotion;
  e.location = loc;
  e.value = BinaryState::kOn;
  return e;
}

TEST(ParseEventLine, MapsFieldsDirectly) {
  auto e = parse_event_line("2024-03-01T02:15:00,M003,motion,bathroom,ON");
  ASSERT_TRUE(e.has_value());
  EXPECT_EQ(format_timestamp(e->timestamp), "2024-03-01T02:15:00");
  EXPECT_EQ(e->sensor_id, "M003");
  EXPECT_EQ(e->type, SensorType::kMotion);
  EXPECT_EQ(e->location, Location::kBathroom);
  EXPECT_TRUE(e->is_on());
}

TEST(ParseEventLine, RejectsSchemaViolations) {
  EXPECT_FALSE(parse_event_line("2024-03-01T02:15:00,M003,motion,bathroom,MAYBE"));
  EXPECT_FALSE(parse_event_line("2024-03-01T02:15:00,M003,motion,bathroom"));
  EXPECT_FALSE(parse_event_line("2024-02-30T02:15:00,M003,motion,bathroom,ON"));
  EXPECT_FALSE(parse_event_line("2024-03-01T25:15:00,M003,motion,bathroom,ON"));
  EXPECT_FALSE(parse_event_line("2024-03-01T02:15:00,,motion,bathroom,ON"));
  EXPECT_FALSE(parse_event_line("2024-03-01T02:15:00,T1,temperature,kitchen,warm"));
}

TEST(ParseEventLine, NumericReadings) {
  auto e = parse_event_line("2024-03-01T12:00:00,T1,temperature,kitchen,21.5");
  ASSERT_TRUE(e.has_value());
  ASSERT_FALSE(e->is_binary());
  EXPECT_DOUBLE_EQ(std::get<double>(e->value), 21.5);
  EXPECT_FALSE(e->is_on());
}

TEST(ParseEventLog, SkipsAndCountsMalformedLines) {
  std::istringstream in(
      "timestamp,sensor_id,sensor_type,location,value\n"
      "2024-03-01T02:15:00,M003,motion,bathroom,ON\n"
      "2024-03-01T02:16:00,M003,motion,bathroom,MAYBE\n"
      "# comment\n"
      "2024-03-01T02:17:00,M003,motion,bathroom,OFF\n");
  auto log = parse_event_log(in);
  EXPECT_EQ(log.events.size(), 2u);
  EXPECT_EQ(log.skipped, 1u);
  ASSERT_EQ(log.skipped_lines.size(), 1u);
  EXPECT_EQ(log.skipped_lines[0], 3u);
}

TEST(ParseEventLog, EmptyInputYieldsNothing) {
  std::istringstream in("");
  auto log = parse_event_log(in);
  EXPECT_TRUE(log.events.empty());
  EXPECT_EQ(log.skipped, 0u);
}

TEST(ParseEventLog, MissingHeaderIsFatal) {
  std::istringstream in("2024-03-01T02:15:00,M003,motion,bathroom,ON\n");
  EXPECT_THROW(parse_event_log(in), std::runtime_error);
}

TEST(ParseEventLog, UnreadableFileIsFatal) {
  EXPECT_THROW(parse_event_log(std::filesystem::path("/nonexistent/log.csv")), std::runtime_error);
}

TEST(ParseEventLog, WriteThenParseRoundTrips) {
  std::vector<SensorEvent> events = {on("2024-03-01T00:00:00"), on("2024-03-01T00:00:00.250000", "B1")};
  SensorEvent temp;
  temp.timestamp = *parse_timestamp("2024-03-01T01:00:00");
  temp.sensor_id = "T1";
  temp.type = SensorType::kTemperature;
  temp.location = Location::kLivingRoom;
  temp.value = 20.25;
  events.push_back(temp);
  std::ostringstream out;
  write_event_log(out, events, "note");
  std::istringstream in(out.str());
  auto log = parse_event_log(in);
  EXPECT_EQ(log.events, events);
}

TEST(Timestamp, FractionalSecondsAndFormatting) {
  auto ts = parse_timestamp("2024-03-01T02:15:00.5");
  ASSERT_TRUE(ts.has_value());
  EXPECT_EQ(time_of_day(*ts), microseconds{(2 * 3600 + 15 * 60) * 1000000LL + 500000});
  EXPECT_EQ(format_timestamp(*ts), "2024-03-01T02:15:00.500000");
  EXPECT_FALSE(parse_timestamp("2024-03-01 02:15:00"));
  EXPECT_EQ(format_date(date_of(*ts)), "2024-03-01");
}

TEST(ClockWindow, HalfOpenAndWrapping) {
  ClockWindow night{hours{21}, hours{7}};
  EXPECT_TRUE(night.contains(*parse_timestamp("2024-03-01T21:00:00")));
  EXPECT_TRUE(night.contains(*parse_timestamp("2024-03-01T06:59:59")));
  EXPECT_FALSE(night.contains(*parse_timestamp("2024-03-01T07:00:00")));
  EXPECT_FALSE(night.contains(*parse_timestamp("2024-03-01T20:59:59")));
  ClockWindow day{hours{7}, hours{21}};
  EXPECT_TRUE(day.contains(*parse_timestamp("2024-03-01T07:00:00")));
  EXPECT_FALSE(day.contains(*parse_timestamp("2024-03-01T21:00:00")));
}

TEST(WindowByDay, SplitsAtMidnight) {
  auto days = window_by_day({on("2024-03-01T23:59:00"), on("2024-03-02T00:01:00")}, "P1");
  ASSERT_EQ(days.size(), 2u);
  EXPECT_EQ(days[0].events.size(), 1u);
  EXPECT_EQ(days[1].events.size(), 1u);
  EXPECT_EQ(format_date(days[0].date), "2024-03-01");
  EXPECT_EQ(days[1].participant_id, "P1");
}

TEST(WindowByDay, OneDateOneWindow) {
  std::vector<SensorEvent> events;
  for (int i = 0; i < 5; ++i) events.push_back(on("2024-03-01T1" + std::to_string(i) + ":00:00"));
  auto days = window_by_day(events, "P1");
  ASSERT_EQ(days.size(), 1u);
  EXPECT_EQ(days[0].events.size(), 5u);
}

TEST(WindowByDay, EmptyInput) { EXPECT_TRUE(window_by_day({}, "P1").empty()); }

// Oracle: stable sort by timestamp, then group consecutive equal dates.
TEST(WindowByDay, MatchesSortThenGroupOracle) {
  Rng rng(11);
  const Timestamp base = *parse_timestamp("2024-03-01T00:00:00");
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SensorEvent> events;
    const int n = 1 + static_cast<int>(rng.below(60));
    for (int i = 0; i < n; ++i) {
      SensorEvent e = on("2024-03-01T00:00:00", "S" + std::to_string(i));
      // coarse offsets force timestamp ties
      e.timestamp = base + minutes{static_cast<long>(rng.below(8)) * 360};
      events.push_back(e);
    }
    auto expected = events;
    std::stable_sort(expected.begin(), expected.end(),
                     [](const SensorEvent& a, const SensorEvent& b) { return a.timestamp < b.timestamp; });
    std::map<sys_days, std::vector<SensorEvent>> grouped;
    for (const auto& e : expected) grouped[floor<days>(e.timestamp)].push_back(e);

    auto windows = window_by_day(events, "P");
    ASSERT_EQ(windows.size(), grouped.size());
    std::size_t i = 0;
    std::size_t total = 0;
    for (const auto& [day, evs] : grouped) {
      EXPECT_EQ(sys_days(windows[i].date), day);
      EXPECT_EQ(windows[i].events, evs);
      total += windows[i].events.size();
      ++i;
    }
    EXPECT_EQ(total, events.size());
  }
}

}  // namespace
