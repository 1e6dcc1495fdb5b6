#pragma once

// Ambient sensor events: CSV parsing and per-day windowing.
//
// Log format (header required, '#' lines are comments):
//   timestamp,sensor_id,sensor_type,location,value
//   2024-03-01T02:15:00,M003,motion,bathroom,ON
//
// Timestamps are home-local wall-clock time; no timezone arithmetic is done.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cci {

using Timestamp = std::chrono::sys_time<std::chrono::microseconds>;
using Date = std::chrono::year_month_day;

enum class SensorType { kMotion, kDoor, kLight, kTemperature, kBed, kOther };
enum class Location { kBathroom, kBedroom, kKitchen, kLivingRoom, kDiningRoom, kEntry, kOther };
enum class BinaryState { kOff, kOn };

// ON/OFF for motion, door and bed sensors; a numeric reading otherwise.
using SensorValue = std::variant<BinaryState, double>;

std::string_view to_string(SensorType type);
std::string_view to_string(Location location);
std::optional<SensorType> parse_sensor_type(std::string_view text);
std::optional<Location> parse_location(std::string_view text);

// True for sensor types that report ON/OFF.
bool is_binary_sensor(SensorType type);

struct SensorEvent {
  Timestamp timestamp;
  std::string sensor_id;
  SensorType type = SensorType::kOther;
  Location location = Location::kOther;
  SensorValue value = BinaryState::kOff;

  bool is_on() const;
  bool is_off() const;
  bool is_binary() const { return std::holds_alternative<BinaryState>(value); }

  friend bool operator==(const SensorEvent&, const SensorEvent&) = default;
};

struct DayWindow {
  std::string participant_id;
  Date date;
  std::vector<SensorEvent> events;  // ascending by timestamp, ties in input order
};

struct ParsedLog {
  std::vector<SensorEvent> events;
  std::size_t skipped = 0;
  std::vector<std::size_t> skipped_lines;  // 1-based line numbers
};

inline constexpr std::string_view kEventLogHeader = "timestamp,sensor_id,sensor_type,location,value";

// Throws std::runtime_error when the file cannot be read or the header is missing.
// Malformed data lines are skipped and counted.
ParsedLog parse_event_log(const std::filesystem::path& path);
ParsedLog parse_event_log(std::istream& in);

std::optional<SensorEvent> parse_event_line(std::string_view line);
void write_event_log(std::ostream& out, std::span<const SensorEvent> events,
                     std::string_view comment = {});
std::string format_event_line(const SensorEvent& event);

// Groups events into calendar days. Empty days are omitted.
std::vector<DayWindow> window_by_day(std::vector<SensorEvent> events, const std::string& participant_id);

// "YYYY-MM-DDTHH:MM:SS" with optional fractional seconds (up to microseconds).
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date date);

Date date_of(Timestamp ts);
Timestamp at(Date date, std::chrono::microseconds time_of_day);
std::chrono::microseconds time_of_day(Timestamp ts);

// Half-open clock-time window [start, end); wraps past midnight when end <= start.
struct ClockWindow {
  std::chrono::minutes start;
  std::chrono::minutes end;

  bool contains(Timestamp ts) const;
};

}  // namespace cci
