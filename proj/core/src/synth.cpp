#include "cci/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace cci {

namespace {

using std::chrono::minutes;
using std::chrono::seconds;
using std::chrono::sys_days;

constexpr std::array<std::string_view, 9> kEffectKeys = {"f01", "f02", "f03", "f04", "f08",
                                                         "f10", "f11", "f12", "f13"};

// Baseline generating parameters.
constexpr double kNightRate = 0.8;
constexpr double kDayRate = 5.0;
constexpr double kWanderRate = 1.0;
constexpr double kRestlessRate = 0.3;
constexpr double kTwoSensorProb = 0.3;
constexpr double kDurationMeanS = 150.0;
constexpr double kDurationSdS = 60.0;
constexpr double kTransitMeanS = 90.0;
constexpr double kTransitSdS = 40.0;
constexpr double kDayTransitProb = 0.5;
constexpr double kPriorEventProb = 0.15;
constexpr std::array<double, 4> kAmbientRates = {30.0, 12.0, 6.0, 3.0};

constexpr std::array<std::string_view, 4> kAmbientIds = {"KI1", "LR1", "DR1", "EN1"};
constexpr std::array<Location, 4> kAmbientRooms = {Location::kKitchen, Location::kLivingRoom,
                                                   Location::kDiningRoom, Location::kEntry};

const Date kStartDate{std::chrono::year{2024}, std::chrono::month{1}, std::chrono::day{1}};

std::vector<int> pick_slots(Rng& rng, std::vector<int> candidates, int n) {
  rng.shuffle(candidates);
  n = std::clamp(n, 0, static_cast<int>(candidates.size()));
  std::vector<int> out(candidates.begin(), candidates.begin() + n);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> iota_slots(std::size_t n) {
  std::vector<int> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<int>(i);
  return v;
}

VisitPlan sample_visit(Rng& rng, int slot, bool with_transit, double noise, double duration_shift_min,
                       double transit_shift_s, double two_sensor_prob) {
  VisitPlan v;
  v.slot = slot;
  if (with_transit) {
    v.transit_s = static_cast<int>(
        std::lround(rng.truncated_normal(kTransitMeanS + transit_shift_s, kTransitSdS * noise, 15.0, 280.0)));
  }
  const int d = static_cast<int>(std::lround(
      rng.truncated_normal(kDurationMeanS + 60.0 * duration_shift_min, kDurationSdS * noise, 0.0, 480.0)));
  if (d >= 20 && d <= 240) {
    v.gaps_s = {d};
  } else if (d > 240) {
    v.gaps_s = {d / 2, d - d / 2};
  }
  v.two_sensors = !v.gaps_s.empty() && rng.bernoulli(std::clamp(two_sensor_prob, 0.0, 1.0));
  return v;
}

SensorEvent make_event(Date date, int clock_s, std::string_view id, SensorType type, Location loc,
                       SensorValue value) {
  SensorEvent e;
  e.timestamp = at(date, seconds{clock_s});
  e.sensor_id = std::string(id);
  e.type = type;
  e.location = loc;
  e.value = value;
  return e;
}

bool in_late_night(int clock_s) { return clock_s >= 22 * 3600 || clock_s < 7 * 3600; }

// Bathroom ON times and sensor ids of one visit starting at `start_s`.
void visit_events(const VisitPlan& v, int start_s, std::vector<int>& times, std::vector<std::string_view>& ids) {
  int t = start_s;
  times.push_back(t);
  ids.push_back("BA1");
  for (std::size_t i = 0; i < v.gaps_s.size(); ++i) {
    t += v.gaps_s[i];
    times.push_back(t);
    ids.push_back(v.two_sensors && i % 2 == 0 ? "BA2" : "BA1");
  }
}

double entropy_of(const std::map<std::string, int>& counts) {
  int total = 0;
  for (const auto& [id, c] : counts) total += c;
  if (total == 0) return 0.0;
  double h = 0.0;
  for (const auto& [id, c] : counts) {
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h > 0.0 ? h : 0.0;
}

std::string participant_name(std::size_t p) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "P%02zu", p + 1);
  return buf;
}

Date offset_date(Date base, int days) { return Date{sys_days{base} + std::chrono::days{days}}; }

double mean_of(std::initializer_list<double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double pop_std_of(std::initializer_list<double> xs) {
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

}  // namespace

std::vector<std::size_t> SynthConfig::days_by_participant() const {
  if (!participant_days.empty()) return participant_days;
  return std::vector<std::size_t>(n_participants, days_per_participant);
}

std::size_t SynthConfig::total_days() const {
  std::size_t n = 0;
  for (auto d : days_by_participant()) n += d;
  return n;
}

double SynthConfig::effect(std::string_view key) const {
  const auto it = effect_sizes.find(std::string(key));
  return it == effect_sizes.end() ? 0.0 : it->second;
}

void SynthConfig::validate() const {
  if (n_participants == 0) throw std::invalid_argument("n_participants must be positive");
  if (participant_days.empty()) {
    if (days_per_participant == 0) throw std::invalid_argument("days_per_participant must be positive");
  } else {
    if (participant_days.size() != n_participants) {
      throw std::invalid_argument("participant_days must have one entry per participant");
    }
    for (auto d : participant_days) {
      if (d == 0) throw std::invalid_argument("participant_days entries must be positive");
    }
  }
  if (!(uti_day_fraction >= 0.0 && uti_day_fraction <= 1.0)) {
    throw std::invalid_argument("uti_day_fraction must lie in [0, 1]");
  }
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    throw std::invalid_argument("noise_scale must be a nonnegative finite number");
  }
  for (const auto& [key, value] : effect_sizes) {
    if (std::find(kEffectKeys.begin(), kEffectKeys.end(), key) == kEffectKeys.end()) {
      throw std::invalid_argument("unsupported effect size key: " + key);
    }
    if (!std::isfinite(value)) throw std::invalid_argument("effect size for " + key + " must be finite");
  }
}

std::map<std::string, double> default_effect_sizes() {
  return {{"f03", 0.8}, {"f08", 2.0}, {"f12", 0.6}, {"f13", 0.2}};
}

SynthConfig default_synth_config() {
  SynthConfig c;
  c.effect_sizes = default_effect_sizes();
  return c;
}

int VisitPlan::duration_s() const {
  int d = 0;
  for (int g : gaps_s) d += g;
  return d;
}

DayPlan sample_day_plan(Rng& rng, bool uti, const SynthConfig& config) {
  const double on = uti ? 1.0 : 0.0;
  const double noise = config.noise_scale;
  auto rate = [&](double base, std::string_view key) { return std::max(0.0, base + on * config.effect(key)); };

  DayPlan plan;
  plan.uti = uti;
  const double dur_shift = on * config.effect("f02");
  const double transit_shift = on * config.effect("f04");
  const double two_prob = kTwoSensorProb + on * config.effect("f11");

  const int n_night = rng.poisson(rate(kNightRate, "f03"));
  for (int slot : pick_slots(rng, iota_slots(kNightSlots.size()), n_night)) {
    plan.night.push_back(sample_visit(rng, slot, true, noise, dur_shift, transit_shift, two_prob));
  }
  const int n_day = rng.poisson(rate(kDayRate, "f01"));
  for (int slot : pick_slots(rng, iota_slots(kDaySlots.size()), n_day)) {
    const bool transit = rng.bernoulli(kDayTransitProb);
    plan.day.push_back(sample_visit(rng, slot, transit, noise, dur_shift, transit_shift, two_prob));
  }

  plan.wander = std::min(rng.poisson(rate(kWanderRate, "f12")), kMaxWander);

  std::vector<int> free_early;
  for (int s = 0; s < static_cast<int>(kEarlyNightSlots); ++s) {
    const bool used = std::any_of(plan.night.begin(), plan.night.end(), [&](const VisitPlan& v) { return v.slot == s; });
    if (!used) free_early.push_back(s);
  }
  plan.restless = pick_slots(rng, free_early, rng.poisson(rate(kRestlessRate, "f10")));

  for (std::size_t i = 0; i < plan.ambient.size(); ++i) {
    const double extra = i == 0 ? 0.0 : on * config.effect("f08");
    plan.ambient[i] = rng.poisson(std::max(0.0, kAmbientRates[i] + extra));
  }
  return plan;
}

std::vector<SensorEvent> render_day(const DayPlan& plan, Date date) {
  std::vector<SensorEvent> events;
  const auto bath = [&](int t, std::string_view id) {
    events.push_back(make_event(date, t, id, SensorType::kMotion, Location::kBathroom, BinaryState::kOn));
  };

  for (const auto& v : plan.night) {
    const int start = kNightSlots[v.slot] * 60;
    events.push_back(make_event(date, start - v.transit_s, "BED", SensorType::kBed, Location::kBedroom,
                                BinaryState::kOff));
    std::vector<int> times;
    std::vector<std::string_view> ids;
    visit_events(v, start, times, ids);
    for (std::size_t i = 0; i < times.size(); ++i) bath(times[i], ids[i]);
    events.push_back(make_event(date, times.back() + 120, "BED", SensorType::kBed, Location::kBedroom,
                                BinaryState::kOn));
  }
  for (const auto& v : plan.day) {
    const int start = kDaySlots[v.slot] * 60;
    if (v.transit_s > 0) {
      events.push_back(make_event(date, start - v.transit_s, "BR1", SensorType::kMotion, Location::kBedroom,
                                  BinaryState::kOn));
    }
    std::vector<int> times;
    std::vector<std::string_view> ids;
    visit_events(v, start, times, ids);
    for (std::size_t i = 0; i < times.size(); ++i) bath(times[i], ids[i]);
  }
  for (int s : plan.restless) {
    events.push_back(make_event(date, kNightSlots[s] * 60, "BR1", SensorType::kMotion, Location::kBedroom,
                                BinaryState::kOn));
  }
  for (int j = 0; j < plan.wander; ++j) {
    const std::size_t room = j % 2;
    events.push_back(make_event(date, 6 * 3600 + 60 + 60 * j, kAmbientIds[room], SensorType::kMotion,
                                kAmbientRooms[room], BinaryState::kOn));
  }

  // Ambient activity, dealt round-robin into the quiet part of each day slot.
  std::array<int, kDaySlots.size()> used{};
  std::size_t slot = 0;
  for (std::size_t room = 0; room < plan.ambient.size(); ++room) {
    for (int j = 0; j < plan.ambient[room]; ++j) {
      std::size_t tries = 0;
      while (used[slot] >= 39 && tries++ < kDaySlots.size()) slot = (slot + 1) % kDaySlots.size();
      if (used[slot] >= 39) break;
      const int t = kDaySlots[slot] * 60 + 15 * 60 + 20 * used[slot];
      ++used[slot];
      slot = (slot + 1) % kDaySlots.size();
      events.push_back(make_event(date, t, kAmbientIds[room], SensorType::kMotion, kAmbientRooms[room],
                                  BinaryState::kOn));
    }
  }

  for (int h = 0; h < 24; ++h) {
    events.push_back(make_event(date, h * 3600 + 30 * 60, "TP1", SensorType::kTemperature, Location::kLivingRoom,
                                20.0 + 0.1 * h));
    events.push_back(make_event(date, h * 3600 + 45 * 60, "LT1", SensorType::kLight, Location::kKitchen,
                                h >= 7 && h < 21 ? 300.0 : 5.0));
  }

  std::stable_sort(events.begin(), events.end(),
                   [](const SensorEvent& a, const SensorEvent& b) { return a.timestamp < b.timestamp; });
  return events;
}

FeatureVector plan_features(const DayPlan& plan, Date date, const std::string& participant_id) {
  FeatureVector fv;
  fv.participant_id = participant_id;
  fv.date = date;

  std::map<std::string, int> on_counts;
  std::vector<double> durations;   // minutes, in time order
  std::vector<double> transits;    // seconds, in time order
  std::vector<double> day_transits;
  int night_count = 0;
  int awakenings = 0;
  int early = 0;
  int episodes = 0;
  int late_moves = 0;

  // Time order of visits: early night slots, day slots, late night slots.
  std::vector<const VisitPlan*> early_night, late_night;
  for (const auto& v : plan.night) {
    (v.slot < static_cast<int>(kEarlyNightSlots) ? early_night : late_night).push_back(&v);
  }
  auto count_visit = [&](const VisitPlan& v) {
    durations.push_back(v.duration_s() / 60.0);
    on_counts["BA1"] += 1;
    for (std::size_t i = 0; i < v.gaps_s.size(); ++i) on_counts[v.two_sensors && i % 2 == 0 ? "BA2" : "BA1"] += 1;
    if (v.two_sensors) ++episodes;
  };
  auto count_night = [&](const VisitPlan& v) {
    count_visit(v);
    ++night_count;
    transits.push_back(v.transit_s);
    awakenings += 1 + 1 + static_cast<int>(v.gaps_s.size());  // bed exit plus bathroom ONs
    on_counts["BED"] += 1;
    const int start = kNightSlots[v.slot] * 60;
    if (in_late_night(start + v.duration_s() + 120)) ++late_moves;
    if (start < 6 * 3600) ++early;
  };
  for (const auto* v : early_night) count_night(*v);
  for (const auto& v : plan.day) {
    count_visit(v);
    if (v.transit_s > 0) {
      transits.push_back(v.transit_s);
      day_transits.push_back(v.transit_s);
      on_counts["BR1"] += 1;
    }
  }
  for (const auto* v : late_night) count_night(*v);

  const int restless = static_cast<int>(plan.restless.size());
  on_counts["BR1"] += restless;
  awakenings += restless + plan.wander;
  early += restless;
  late_moves += restless + plan.wander;
  on_counts["KI1"] += (plan.wander + 1) / 2;
  on_counts["LR1"] += plan.wander / 2;
  for (std::size_t i = 0; i < plan.ambient.size(); ++i) on_counts[std::string(kAmbientIds[i])] += plan.ambient[i];
  std::erase_if(on_counts, [](const auto& kv) { return kv.second == 0; });

  auto stats = [](const std::vector<double>& xs) {
    if (xs.empty()) return std::pair{0.0, 0.0};
    double s = 0.0;
    for (double x : xs) s += x;
    const double m = s / xs.size();
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::pair{m, std::sqrt(ss / xs.size())};
  };

  const int total_visits = static_cast<int>(durations.size());
  fv[Feature::kDailyBathroomVisits] = total_visits;
  fv[Feature::kAvgVisitDurationMin] = stats(durations).first;
  fv[Feature::kNocturnalBathroomVisits] = night_count;
  std::tie(fv[Feature::kMeanTransitS], fv[Feature::kStdTransitS]) = stats(transits);
  std::tie(fv[Feature::kMeanDayTransitS], fv[Feature::kStdDayTransitS]) = stats(day_transits);
  fv[Feature::kMovementEntropy] = entropy_of(on_counts);
  fv[Feature::kNocturnalAwakenings] = awakenings;
  fv[Feature::kEarlyAwakenings] = early;
  fv[Feature::kConsecutiveBathroomEpisodes] = episodes;
  fv[Feature::kNocturnalNonBathroomMoves] = late_moves;
  fv[Feature::kPctVisitsNight] = total_visits > 0 ? 100.0 * night_count / total_visits : 0.0;
  return fv;
}

std::vector<FeatureVector> generate_feature_dataset(const SynthConfig& config) {
  config.validate();
  const auto per_participant = config.days_by_participant();
  const std::size_t n = config.total_days();

  std::vector<int> labels(n, 0);
  const auto n_pos = static_cast<std::size_t>(std::floor(config.uti_day_fraction * static_cast<double>(n) + 0.5));
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(std::min(n_pos, n)), 1);
  Rng label_rng(mix_seed(config.seed, 0x6c61626c));
  label_rng.shuffle(labels);

  std::vector<FeatureVector> rows;
  rows.reserve(n);
  std::size_t i = 0;
  for (std::size_t p = 0; p < per_participant.size(); ++p) {
    const std::string pid = participant_name(p);
    for (std::size_t d = 0; d < per_participant[p]; ++d, ++i) {
      Rng rng(mix_seed(mix_seed(config.seed, 0x726f7773), i));
      const bool uti = labels[i] == 1;
      const double prior = std::clamp(kPriorEventProb + (uti ? config.effect("f13") : 0.0), 0.0, 1.0);
      const bool h3 = rng.bernoulli(prior);
      const bool h2 = rng.bernoulli(prior);
      const bool h1 = rng.bernoulli(prior);
      const Date date = offset_date(kStartDate, static_cast<int>(d));
      const auto f2 = plan_features(sample_day_plan(rng, h2, config), date, pid);
      const auto f1 = plan_features(sample_day_plan(rng, h1, config), date, pid);
      FeatureVector fv = plan_features(sample_day_plan(rng, uti, config), date, pid);

      const double v0 = fv[Feature::kDailyBathroomVisits];
      const double v1 = f1[Feature::kDailyBathroomVisits];
      const double v2 = f2[Feature::kDailyBathroomVisits];
      fv[Feature::kHealthEventLast3] = (h1 || h2 || h3) ? 1.0 : 0.0;
      fv[Feature::kDeltaVisitFreq] = v0 - v1;
      fv[Feature::kRoll3StdDurationMin] =
          pop_std_of({fv[Feature::kAvgVisitDurationMin], f1[Feature::kAvgVisitDurationMin],
                      f2[Feature::kAvgVisitDurationMin]});
      fv[Feature::kRoll3AvgVisits] = mean_of({v0, v1, v2});
      fv.label = labels[i];
      rows.push_back(std::move(fv));
    }
  }
  return rows;
}

std::vector<ParticipantLog> generate_event_logs(const SynthConfig& config) {
  config.validate();
  const auto per_participant = config.days_by_participant();
  const double f = config.uti_day_fraction;
  const double exit_prob = 1.0 / 3.0;
  const double enter_prob = f >= 1.0 ? 1.0 : std::min(1.0, f / (1.0 - f) * exit_prob);

  std::vector<ParticipantLog> logs;
  for (std::size_t p = 0; p < per_participant.size(); ++p) {
    Rng rng(mix_seed(mix_seed(config.seed, 0x6c6f6773), p));
    ParticipantLog log;
    log.participant_id = participant_name(p);

    std::vector<int> labels(per_participant[p]);
    bool state = rng.bernoulli(f);
    for (std::size_t d = 0; d < labels.size(); ++d) {
      if (d > 0) state = state ? !rng.bernoulli(f >= 1.0 ? 0.0 : exit_prob) : rng.bernoulli(enter_prob);
      labels[d] = state ? 1 : 0;
    }

    for (std::size_t d = 0; d < labels.size(); ++d) {
      const Date date = offset_date(kStartDate, static_cast<int>(d));
      const DayPlan plan = sample_day_plan(rng, labels[d] == 1, config);
      auto events = render_day(plan, date);
      log.events.insert(log.events.end(), std::make_move_iterator(events.begin()),
                        std::make_move_iterator(events.end()));
      FeatureVector fv = plan_features(plan, date, log.participant_id);
      fv.label = labels[d];

      bool recent = false;
      for (std::size_t back = 1; back <= 3 && back <= d; ++back) recent = recent || labels[d - back] == 1;
      fv[Feature::kHealthEventLast3] = recent ? 1.0 : 0.0;
      const double v0 = fv[Feature::kDailyBathroomVisits];
      const double u0 = fv[Feature::kAvgVisitDurationMin];
      if (d == 0) {
        fv[Feature::kDeltaVisitFreq] = 0.0;
        fv[Feature::kRoll3StdDurationMin] = 0.0;
        fv[Feature::kRoll3AvgVisits] = v0;
      } else {
        const auto& p1 = log.targets[d - 1];
        const double v1 = p1[Feature::kDailyBathroomVisits];
        const double u1 = p1[Feature::kAvgVisitDurationMin];
        fv[Feature::kDeltaVisitFreq] = v0 - v1;
        if (d == 1) {
          fv[Feature::kRoll3StdDurationMin] = pop_std_of({u0, u1});
          fv[Feature::kRoll3AvgVisits] = mean_of({v0, v1});
        } else {
          const auto& p2 = log.targets[d - 2];
          fv[Feature::kRoll3StdDurationMin] = pop_std_of({u0, u1, p2[Feature::kAvgVisitDurationMin]});
          fv[Feature::kRoll3AvgVisits] = mean_of({v0, v1, p2[Feature::kDailyBathroomVisits]});
        }
      }
      log.targets.push_back(std::move(fv));
    }
    logs.push_back(std::move(log));
  }
  return logs;
}

HealthEvents health_events_of(const ParticipantLog& log) {
  HealthEvents events;
  for (const auto& t : log.targets) {
    if (t.label && *t.label == 1) events.insert(sys_days{t.date});
  }
  return events;
}

}  // namespace cci
