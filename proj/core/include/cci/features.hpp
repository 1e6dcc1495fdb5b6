#pragma once

// Behavioral day-features extracted from ambient sensor days.
//
// Clock windows are half-open. Nocturnal means [21:00, 07:00) for bathroom
// visits and awakenings, [22:00, 07:00) for non-bathroom movement. Means and
// standard deviations over empty evidence are 0; standard deviations are
// population (divide by n).

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cci/event_model.hpp"
#include "cci/matrix.hpp"

namespace cci {

class ProbModel;

enum class Feature : std::size_t {
  kDailyBathroomVisits = 0,         // f01
  kAvgVisitDurationMin,             // f02
  kNocturnalBathroomVisits,         // f03
  kMeanTransitS,                    // f04
  kStdTransitS,                     // f05
  kMeanDayTransitS,                 // f06
  kStdDayTransitS,                  // f07
  kMovementEntropy,                 // f08
  kNocturnalAwakenings,             // f09
  kEarlyAwakenings,                 // f10
  kConsecutiveBathroomEpisodes,     // f11
  kNocturnalNonBathroomMoves,       // f12
  kHealthEventLast3,                // f13
  kDeltaVisitFreq,                  // f14
  kRoll3StdDurationMin,             // f15
  kPctVisitsNight,                  // f16
  kRoll3AvgVisits,                  // f17
};

inline constexpr std::size_t kNumFeatures = 17;

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "f01_daily_bathroom_visits",   "f02_avg_visit_duration_min",     "f03_nocturnal_bathroom_visits",
    "f04_mean_transit_s",          "f05_std_transit_s",              "f06_mean_day_transit_s",
    "f07_std_day_transit_s",       "f08_movement_entropy",           "f09_nocturnal_awakenings",
    "f10_early_awakenings",        "f11_consecutive_bathroom_episodes", "f12_nocturnal_nonbathroom_moves",
    "f13_health_event_last3",      "f14_delta_visit_freq",           "f15_roll3_std_duration_min",
    "f16_pct_visits_night",        "f17_roll3_avg_visits",
};

// Integer-valued features, serialized without decimals.
bool is_count_feature(Feature f);
std::string_view feature_name(Feature f);
std::optional<Feature> parse_feature_name(std::string_view name);

// The five markers used for the main results: nocturnal bathroom visits,
// nocturnal non-bathroom movement, percentage of nocturnal visits, recent
// health event and movement entropy.
inline constexpr std::array<Feature, 5> kTop5Features = {
    Feature::kNocturnalBathroomVisits, Feature::kNocturnalNonBathroomMoves, Feature::kPctVisitsNight,
    Feature::kHealthEventLast3,        Feature::kMovementEntropy,
};

struct FeatureVector {
  std::string participant_id;
  Date date;
  std::array<double, kNumFeatures> values{};
  std::optional<int> label;

  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct Visit {
  Timestamp start;
  Timestamp end;

  double duration_min() const;
};

inline constexpr ClockWindow kNocturnalWindow{std::chrono::hours{21}, std::chrono::hours{7}};
inline constexpr ClockWindow kLateNightWindow{std::chrono::hours{22}, std::chrono::hours{7}};
inline constexpr ClockWindow kDaytimeWindow{std::chrono::hours{7}, std::chrono::hours{21}};

// Runs of ON events at `location`; a new visit starts when the gap since the
// previous ON event is >= gap.
std::vector<Visit> segment_visits(const DayWindow& day, Location location = Location::kBathroom,
                                  std::chrono::minutes gap = std::chrono::minutes{5});

struct VisitSummary {
  int count = 0;
  double avg_duration_min = 0.0;
};
VisitSummary visit_count_and_avg_duration(std::span<const Visit> visits);

int nocturnal_visits(std::span<const Visit> visits, ClockWindow window = kNocturnalWindow);

struct Transit {
  Timestamp bedroom_time;
  double seconds = 0.0;
};

// Bedroom-to-bathroom transitions. Bedroom events are binary events located in
// the bedroom (a bed exit reports OFF); bathroom events are bathroom ON events.
// Each bathroom event is matched to the earliest unconsumed bedroom event that
// precedes it by at most `window`; each bedroom event is used at most once.
std::vector<Transit> transit_times(const DayWindow& day, std::chrono::seconds window = std::chrono::seconds{300});

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
// day_only keeps transits whose bedroom event lies in [07:00, 21:00).
MeanStd transit_stats(std::span<const Transit> transits, bool day_only);

// Shannon entropy (bits) of ON-event counts per sensor.
double movement_entropy(const DayWindow& day);

// Bed OFF or non-bed ON events inside [21:00, 07:00).
int nocturnal_awakenings(const DayWindow& day);

// Clusters of ON events before 06:00; a gap >= cluster_gap starts a new one.
int early_awakenings(const DayWindow& day, std::chrono::minutes cluster_gap = std::chrono::minutes{10});

// Maximal clusters of bathroom ON events with consecutive gaps <= window that
// involve at least two distinct sensors.
int consecutive_bathroom_episodes(const DayWindow& day, std::chrono::minutes window = std::chrono::minutes{30});

// Non-bathroom ON events inside [22:00, 07:00).
int nocturnal_nonbathroom(const DayWindow& day);

using HealthEvents = std::set<std::chrono::sys_days>;

// Fills f13, f14, f15 and f17 of `current` from the participant's earlier days.
// `history` is sorted by date and holds days strictly before current.date.
void apply_temporal_features(FeatureVector& current, std::span<const FeatureVector> history,
                             const HealthEvents& health_events);

// Sequential pass over one participant's days sorted by date.
void temporal_features(std::span<FeatureVector> days, const HealthEvents& health_events);

// Day-local features (everything except the temporal block) for one window.
FeatureVector extract_day_local_features(const DayWindow& day);

FeatureVector extract_day_features(const DayWindow& day, std::span<const FeatureVector> history,
                                   const HealthEvents& health_events);

// All windows of one participant, in date order.
std::vector<FeatureVector> extract_participant_features(std::span<const DayWindow> days,
                                                        const HealthEvents& health_events);

enum class SelectionMode { kTop5Paper, kAll17, kPermutationTopK };

struct SelectionRequest {
  SelectionMode mode = SelectionMode::kTop5Paper;
  std::size_t k = 5;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  // Required for kPermutationTopK: a model trained on all 17 columns and a
  // validation split in the same column order.
  const ProbModel* model = nullptr;
  const Matrix* validation_x = nullptr;
  std::span<const int> validation_y;
};

std::optional<SelectionMode> parse_selection_mode(std::string_view text);
std::string_view to_string(SelectionMode mode);

// Columns to keep, in order. Throws std::invalid_argument for permutation
// ranking without a model or validation data.
std::vector<Feature> select_features(const SelectionRequest& request);

// Mean accuracy drop per column under within-column permutation.
std::vector<double> permutation_importance(const ProbModel& model, const Matrix& x, std::span<const int> y,
                                           std::size_t repeats, std::uint64_t seed);

Matrix project(std::span<const FeatureVector> vectors, std::span<const Feature> columns);
std::vector<std::string> column_names(std::span<const Feature> columns);

// Feature CSV: participant_id,date,<17 names>,label. Counts are written as
// integers, continuous values with 6 decimals, a missing label as empty.
void write_feature_csv(std::ostream& out, std::span<const FeatureVector> vectors, std::string_view comment = {});
std::vector<FeatureVector> read_feature_csv(std::istream& in);
std::vector<FeatureVector> read_feature_csv(const std::filesystem::path& path);
void write_feature_csv(const std::filesystem::path& path, std::span<const FeatureVector> vectors,
                       std::string_view comment = {});

}  // namespace cci
