#pragma once

// Seeded synthetic participants standing in for private smart-home data.
//
// Every synthetic day is first sampled as a DayPlan (visits, transits,
// nocturnal wandering, ambient activity). A plan can be rendered into sensor
// events, and its features can be computed directly from the plan, so the
// feature dataset and the event logs share one generative model.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cci/event_model.hpp"
#include "cci/features.hpp"
#include "cci/rng.hpp"

namespace cci {

// effect_sizes are additive shifts applied on UTI days to the generating
// parameter behind each feature:
//   f01 daytime visit rate, f02 mean visit duration (min), f03 nocturnal
//   visit rate, f04 mean transit (s), f08 secondary-room activity rate,
//   f10 restless-cluster rate, f11 two-sensor visit probability,
//   f12 nocturnal wandering rate, f13 per-day probability of a preceding
//   health event.
// Derived features (f16 from f03/f01, the rolling block) shift through these.
// noise_scale multiplies the spread of continuous draws.
struct SynthConfig {
  std::uint64_t seed = 42;
  std::size_t n_participants = 8;
  std::size_t days_per_participant = 0;          // used when participant_days is empty
  std::vector<std::size_t> participant_days = {38, 13, 15, 10, 9, 13, 9, 10};
  double uti_day_fraction = 56.0 / 117.0;
  std::map<std::string, double> effect_sizes;  // keyed "f01".."f13"
  double noise_scale = 1.0;

  std::vector<std::size_t> days_by_participant() const;
  std::size_t total_days() const;
  double effect(std::string_view key) const;

  // Throws std::invalid_argument on out-of-range fields or unknown effect keys.
  void validate() const;
};

// Effect sizes tuned so the default dataset sits in a moderately separable regime.
std::map<std::string, double> default_effect_sizes();
SynthConfig default_synth_config();

struct VisitPlan {
  int slot = 0;                  // index into the night or day slot table
  int transit_s = 0;             // 0 means no preceding bedroom event
  std::vector<int> gaps_s;       // gaps between consecutive bathroom ON events
  bool two_sensors = false;

  int duration_s() const;
};

struct DayPlan {
  bool uti = false;
  std::vector<VisitPlan> night;  // slots into kNightSlots, ascending
  std::vector<VisitPlan> day;    // slots into kDaySlots, ascending
  int wander = 0;                // non-bathroom ON events in [06:00, 07:00)
  std::vector<int> restless;     // early night slots with a bedroom wake event
  std::array<int, 4> ambient{};  // daytime ON counts for kitchen, living, dining, entry
};

// Clock minutes of the visit slots.
inline constexpr std::array<int, 13> kNightSlots = {20,  60,  100, 140,  180,  220, 260,
                                                    300, 340, 1270, 1310, 1350, 1390};
inline constexpr std::size_t kEarlyNightSlots = 9;  // slots before 06:00
inline constexpr std::array<int, 18> kDaySlots = {450, 495, 540, 585, 630, 675, 720, 765, 810,
                                                  855, 900, 945, 990, 1035, 1080, 1125, 1170, 1215};
inline constexpr int kMaxWander = 50;

DayPlan sample_day_plan(Rng& rng, bool uti, const SynthConfig& config);

// Sensor events for one day, sorted by time.
std::vector<SensorEvent> render_day(const DayPlan& plan, Date date);

// Day-local features implied by a plan, computed from the plan's own
// bookkeeping rather than from rendered events.
FeatureVector plan_features(const DayPlan& plan, Date date, const std::string& participant_id);

// Labeled feature rows, i.i.d. given the label count; each row carries its
// own simulated three-day history for the temporal features.
std::vector<FeatureVector> generate_feature_dataset(const SynthConfig& config);

struct ParticipantLog {
  std::string participant_id;
  std::vector<SensorEvent> events;
  std::vector<FeatureVector> targets;  // labeled, one per day, in date order
};

// Contiguous day sequences per participant; UTI days follow a two-state
// Markov chain with stationary rate uti_day_fraction and mean episode
// length 3. Health events are the UTI days.
std::vector<ParticipantLog> generate_event_logs(const SynthConfig& config);

HealthEvents health_events_of(const ParticipantLog& log);

}  // namespace cci
