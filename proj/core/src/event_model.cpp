#include "cci/event_model.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace cci {
namespace {

using namespace std::chrono;

constexpr std::array<std::pair<SensorType, std::string_view>, 6> kSensorTypeNames{{
    {SensorType::kMotion, "motion"},
    {SensorType::kDoor, "door"},
    {SensorType::kLight, "light"},
    {SensorType::kTemperature, "temperature"},
    {SensorType::kBed, "bed"},
    {SensorType::kOther, "other"},
}};

constexpr std::array<std::pair<Location, std::string_view>, 7> kLocationNames{{
    {Location::kBathroom, "bathroom"},
    {Location::kBedroom, "bedroom"},
    {Location::kKitchen, "kitchen"},
    {Location::kLivingRoom, "living_room"},
    {Location::kDiningRoom, "dining_room"},
    {Location::kEntry, "entry"},
    {Location::kOther, "other"},
}};

std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

template <typename Int>
bool parse_fixed_int(std::string_view text, Int& out) {
  if (text.empty()) return false;
  for (char c : text) {
    if (c < '0' || c > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

std::optional<double> parse_number(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

}  // namespace

std::string_view to_string(SensorType type) {
  for (const auto& [t, name] : kSensorTypeNames) {
    if (t == type) return name;
  }
  return "other";
}

std::string_view to_string(Location location) {
  for (const auto& [l, name] : kLocationNames) {
    if (l == location) return name;
  }
  return "other";
}

std::optional<SensorType> parse_sensor_type(std::string_view text) {
  for (const auto& [t, name] : kSensorTypeNames) {
    if (name == text) return t;
  }
  return std::nullopt;
}

std::optional<Location> parse_location(std::string_view text) {
  for (const auto& [l, name] : kLocationNames) {
    if (name == text) return l;
  }
  return std::nullopt;
}

bool is_binary_sensor(SensorType type) {
  return type == SensorType::kMotion || type == SensorType::kDoor || type == SensorType::kBed;
}

bool SensorEvent::is_on() const {
  const auto* state = std::get_if<BinaryState>(&value);
  return state != nullptr && *state == BinaryState::kOn;
}

bool SensorEvent::is_off() const {
  const auto* state = std::get_if<BinaryState>(&value);
  return state != nullptr && *state == BinaryState::kOff;
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  // YYYY-MM-DDTHH:MM:SS[.ffffff]
  if (text.size() < 19 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
      text[16] != ':') {
    return std::nullopt;
  }
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!parse_fixed_int(text.substr(0, 4), y) || !parse_fixed_int(text.substr(5, 2), mo) ||
      !parse_fixed_int(text.substr(8, 2), d) || !parse_fixed_int(text.substr(11, 2), h) ||
      !parse_fixed_int(text.substr(14, 2), mi) || !parse_fixed_int(text.substr(17, 2), s)) {
    return std::nullopt;
  }
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return std::nullopt;

  long long micros = 0;
  if (text.size() > 19) {
    if (text[19] != '.') return std::nullopt;
    const std::string_view frac = text.substr(20);
    if (frac.empty() || frac.size() > 6) return std::nullopt;
    if (!parse_fixed_int(frac, micros)) return std::nullopt;
    for (std::size_t i = frac.size(); i < 6; ++i) micros *= 10;
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + microseconds{micros};
}

std::string format_timestamp(Timestamp ts) {
  const auto day_start = floor<days>(ts);
  const year_month_day ymd{day_start};
  const auto tod = ts - day_start;
  const auto h = duration_cast<hours>(tod);
  const auto mi = duration_cast<minutes>(tod - h);
  const auto s = duration_cast<seconds>(tod - h - mi);
  const auto us = (tod - h - mi - s).count();
  char buf[48];
  if (us == 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(h.count()), static_cast<int>(mi.count()), static_cast<int>(s.count()));
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%06lld", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(h.count()), static_cast<int>(mi.count()), static_cast<int>(s.count()),
                  static_cast<long long>(us));
  }
  return buf;
}

std::optional<Date> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0;
  unsigned mo = 0, d = 0;
  if (!parse_fixed_int(text.substr(0, 4), y) || !parse_fixed_int(text.substr(5, 2), mo) ||
      !parse_fixed_int(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

std::string format_date(Date date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

Date date_of(Timestamp ts) { return year_month_day{floor<days>(ts)}; }

Timestamp at(Date date, microseconds tod) { return sys_days{date} + tod; }

microseconds time_of_day(Timestamp ts) { return ts - floor<days>(ts); }

bool ClockWindow::contains(Timestamp ts) const {
  const auto tod = time_of_day(ts);
  const microseconds lo = start;
  const microseconds hi = end;
  if (lo < hi) return tod >= lo && tod < hi;
  return tod >= lo || tod < hi;
}

std::optional<SensorEvent> parse_event_line(std::string_view line) {
  std::array<std::string_view, 5> fields;
  std::size_t n = 0;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (n == fields.size()) return std::nullopt;
    if (comma == std::string_view::npos) {
      fields[n++] = line.substr(start);
      break;
    }
    fields[n++] = line.substr(start, comma - start);
    start = comma + 1;
  }
  if (n != fields.size()) return std::nullopt;

  SensorEvent event;
  const auto ts = parse_timestamp(fields[0]);
  if (!ts || fields[1].empty()) return std::nullopt;
  event.timestamp = *ts;
  event.sensor_id = std::string(fields[1]);

  const auto type = parse_sensor_type(fields[2]);
  const auto location = parse_location(fields[3]);
  if (!type || !location) return std::nullopt;
  event.type = *type;
  event.location = *location;

  if (is_binary_sensor(event.type)) {
    if (fields[4] == "ON") {
      event.value = BinaryState::kOn;
    } else if (fields[4] == "OFF") {
      event.value = BinaryState::kOff;
    } else {
      return std::nullopt;
    }
  } else {
    const auto reading = parse_number(fields[4]);
    if (!reading) return std::nullopt;
    event.value = *reading;
  }
  return event;
}

ParsedLog parse_event_log(std::istream& in) {
  ParsedLog result;
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = strip_cr(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != kEventLogHeader) {
        throw std::runtime_error("event log line " + std::to_string(line_no) + ": expected header '" +
                                 std::string(kEventLogHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    if (auto event = parse_event_line(line)) {
      result.events.push_back(std::move(*event));
    } else {
      ++result.skipped;
      result.skipped_lines.push_back(line_no);
    }
  }
  return result;
}

ParsedLog parse_event_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read event log: " + path.string());
  try {
    return parse_event_log(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::string format_event_line(const SensorEvent& event) {
  std::string line = format_timestamp(event.timestamp);
  line += ',';
  line += event.sensor_id;
  line += ',';
  line += to_string(event.type);
  line += ',';
  line += to_string(event.location);
  line += ',';
  if (const auto* state = std::get_if<BinaryState>(&event.value)) {
    line += *state == BinaryState::kOn ? "ON" : "OFF";
  } else {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", std::get<double>(event.value));
    line += buf;
  }
  return line;
}

void write_event_log(std::ostream& out, std::span<const SensorEvent> events, std::string_view comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << kEventLogHeader << '\n';
  for (const auto& e : events) out << format_event_line(e) << '\n';
}

std::vector<DayWindow> window_by_day(std::vector<SensorEvent> events, const std::string& participant_id) {
  std::stable_sort(events.begin(), events.end(),
                   [](const SensorEvent& a, const SensorEvent& b) { return a.timestamp < b.timestamp; });
  std::vector<DayWindow> windows;
  for (auto& e : events) {
    const Date d = date_of(e.timestamp);
    if (windows.empty() || windows.back().date != d) {
      windows.push_back(DayWindow{participant_id, d, {}});
    }
    windows.back().events.push_back(std::move(e));
  }
  return windows;
}

}  // namespace cci
