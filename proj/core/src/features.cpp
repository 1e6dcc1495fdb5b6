#include "cci/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cci/models.hpp"
#include "cci/rng.hpp"

namespace cci {
namespace {

using namespace std::chrono;

constexpr ClockWindow kBeforeSix{minutes{0}, hours{6}};

double to_seconds(microseconds d) { return static_cast<double>(d.count()) / 1e6; }

const FeatureVector* find_day(std::span<const FeatureVector> history, sys_days day) {
  for (const auto& fv : history) {
    if (sys_days{fv.date} == day) return &fv;
  }
  return nullptr;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

bool is_count_feature(Feature f) {
  switch (f) {
    case Feature::kDailyBathroomVisits:
    case Feature::kNocturnalBathroomVisits:
    case Feature::kNocturnalAwakenings:
    case Feature::kEarlyAwakenings:
    case Feature::kConsecutiveBathroomEpisodes:
    case Feature::kNocturnalNonBathroomMoves:
    case Feature::kHealthEventLast3:
    case Feature::kDeltaVisitFreq:
      return true;
    default:
      return false;
  }
}

std::string_view feature_name(Feature f) { return kFeatureNames[static_cast<std::size_t>(f)]; }

std::optional<Feature> parse_feature_name(std::string_view name) {
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    // Accept the full column name or its "fNN" prefix.
    if (kFeatureNames[i] == name || kFeatureNames[i].substr(0, 3) == name) return static_cast<Feature>(i);
  }
  return std::nullopt;
}

double Visit::duration_min() const { return to_seconds(end - start) / 60.0; }

std::vector<Visit> segment_visits(const DayWindow& day, Location location, minutes gap) {
  std::vector<Visit> visits;
  for (const auto& e : day.events) {
    if (e.location != location || !e.is_on()) continue;
    if (visits.empty() || e.timestamp - visits.back().end >= gap) {
      visits.push_back(Visit{e.timestamp, e.timestamp});
    } else {
      visits.back().end = e.timestamp;
    }
  }
  return visits;
}

VisitSummary visit_count_and_avg_duration(std::span<const Visit> visits) {
  VisitSummary summary;
  summary.count = static_cast<int>(visits.size());
  if (visits.empty()) return summary;
  double total = 0.0;
  for (const auto& v : visits) total += v.duration_min();
  summary.avg_duration_min = total / static_cast<double>(visits.size());
  return summary;
}

int nocturnal_visits(std::span<const Visit> visits, ClockWindow window) {
  return static_cast<int>(
      std::count_if(visits.begin(), visits.end(), [&](const Visit& v) { return window.contains(v.start); }));
}

std::vector<Transit> transit_times(const DayWindow& day, seconds window) {
  std::vector<Transit> out;
  std::deque<Timestamp> pending;  // unconsumed bedroom events, oldest first
  for (const auto& e : day.events) {
    if (e.location == Location::kBedroom && e.is_binary()) {
      pending.push_back(e.timestamp);
    } else if (e.location == Location::kBathroom && e.is_on()) {
      while (!pending.empty() && e.timestamp - pending.front() > window) pending.pop_front();
      if (!pending.empty()) {
        out.push_back(Transit{pending.front(), to_seconds(e.timestamp - pending.front())});
        pending.pop_front();
      }
    }
  }
  return out;
}

MeanStd transit_stats(std::span<const Transit> transits, bool day_only) {
  std::vector<double> secs;
  for (const auto& t : transits) {
    if (!day_only || kDaytimeWindow.contains(t.bedroom_time)) secs.push_back(t.seconds);
  }
  return MeanStd{mean(secs), population_std(secs)};
}

double movement_entropy(const DayWindow& day) {
  std::map<std::string, int> counts;
  int total = 0;
  for (const auto& e : day.events) {
    if (!e.is_on()) continue;
    ++counts[e.sensor_id];
    ++total;
  }
  if (total == 0) return 0.0;
  double h = 0.0;
  for (const auto& [id, c] : counts) {
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h > 0.0 ? h : 0.0;
}

int nocturnal_awakenings(const DayWindow& day) {
  int n = 0;
  for (const auto& e : day.events) {
    const bool qualifies = e.type == SensorType::kBed ? e.is_off() : e.is_on();
    if (qualifies && kNocturnalWindow.contains(e.timestamp)) ++n;
  }
  return n;
}

int early_awakenings(const DayWindow& day, minutes cluster_gap) {
  int clusters = 0;
  std::optional<Timestamp> last;
  for (const auto& e : day.events) {
    if (!e.is_on() || !kBeforeSix.contains(e.timestamp)) continue;
    if (!last || e.timestamp - *last >= cluster_gap) ++clusters;
    last = e.timestamp;
  }
  return clusters;
}

int consecutive_bathroom_episodes(const DayWindow& day, minutes window) {
  int episodes = 0;
  std::optional<Timestamp> last;
  std::set<std::string_view> sensors;
  auto close_cluster = [&] {
    if (sensors.size() >= 2) ++episodes;
    sensors.clear();
  };
  for (const auto& e : day.events) {
    if (e.location != Location::kBathroom || !e.is_on()) continue;
    if (last && e.timestamp - *last > window) close_cluster();
    sensors.insert(e.sensor_id);
    last = e.timestamp;
  }
  close_cluster();
  return episodes;
}

int nocturnal_nonbathroom(const DayWindow& day) {
  return static_cast<int>(std::count_if(day.events.begin(), day.events.end(), [](const SensorEvent& e) {
    return e.is_on() && e.location != Location::kBathroom && kLateNightWindow.contains(e.timestamp);
  }));
}

void apply_temporal_features(FeatureVector& current, std::span<const FeatureVector> history,
                             const HealthEvents& health_events) {
  const sys_days d{current.date};

  bool recent_event = false;
  for (int back = 1; back <= 3; ++back) {
    if (health_events.contains(d - days{back})) recent_event = true;
  }
  current[Feature::kHealthEventLast3] = recent_event ? 1.0 : 0.0;

  const FeatureVector* prev1 = find_day(history, d - days{1});
  const FeatureVector* prev2 = find_day(history, d - days{2});

  current[Feature::kDeltaVisitFreq] =
      prev1 ? current[Feature::kDailyBathroomVisits] - (*prev1)[Feature::kDailyBathroomVisits] : 0.0;

  std::vector<double> durations{current[Feature::kAvgVisitDurationMin]};
  std::vector<double> counts{current[Feature::kDailyBathroomVisits]};
  for (const FeatureVector* p : {prev1, prev2}) {
    if (!p) continue;
    durations.push_back((*p)[Feature::kAvgVisitDurationMin]);
    counts.push_back((*p)[Feature::kDailyBathroomVisits]);
  }
  current[Feature::kRoll3StdDurationMin] = population_std(durations);
  current[Feature::kRoll3AvgVisits] = mean(counts);
}

void temporal_features(std::span<FeatureVector> days, const HealthEvents& health_events) {
  for (std::size_t i = 0; i < days.size(); ++i) {
    apply_temporal_features(days[i], days.first(i), health_events);
  }
}

FeatureVector extract_day_local_features(const DayWindow& day) {
  FeatureVector fv;
  fv.participant_id = day.participant_id;
  fv.date = day.date;

  const auto visits = segment_visits(day);
  const auto summary = visit_count_and_avg_duration(visits);
  const int night = nocturnal_visits(visits);
  fv[Feature::kDailyBathroomVisits] = summary.count;
  fv[Feature::kAvgVisitDurationMin] = summary.avg_duration_min;
  fv[Feature::kNocturnalBathroomVisits] = night;

  const auto transits = transit_times(day);
  const auto all = transit_stats(transits, false);
  const auto daytime = transit_stats(transits, true);
  fv[Feature::kMeanTransitS] = all.mean;
  fv[Feature::kStdTransitS] = all.std;
  fv[Feature::kMeanDayTransitS] = daytime.mean;
  fv[Feature::kStdDayTransitS] = daytime.std;

  fv[Feature::kMovementEntropy] = movement_entropy(day);
  fv[Feature::kNocturnalAwakenings] = nocturnal_awakenings(day);
  fv[Feature::kEarlyAwakenings] = early_awakenings(day);
  fv[Feature::kConsecutiveBathroomEpisodes] = consecutive_bathroom_episodes(day);
  fv[Feature::kNocturnalNonBathroomMoves] = nocturnal_nonbathroom(day);
  fv[Feature::kPctVisitsNight] = summary.count > 0 ? 100.0 * night / summary.count : 0.0;
  return fv;
}

FeatureVector extract_day_features(const DayWindow& day, std::span<const FeatureVector> history,
                                   const HealthEvents& health_events) {
  FeatureVector fv = extract_day_local_features(day);
  apply_temporal_features(fv, history, health_events);
  return fv;
}

std::vector<FeatureVector> extract_participant_features(std::span<const DayWindow> days,
                                                        const HealthEvents& health_events) {
  std::vector<FeatureVector> out;
  out.reserve(days.size());
  for (const auto& day : days) {
    out.push_back(extract_day_features(day, out, health_events));
  }
  return out;
}

std::optional<SelectionMode> parse_selection_mode(std::string_view text) {
  if (text == "top5_paper") return SelectionMode::kTop5Paper;
  if (text == "all17") return SelectionMode::kAll17;
  if (text == "permutation_topk") return SelectionMode::kPermutationTopK;
  return std::nullopt;
}

std::string_view to_string(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::kTop5Paper:
      return "top5_paper";
    case SelectionMode::kAll17:
      return "all17";
    case SelectionMode::kPermutationTopK:
      return "permutation_topk";
  }
  return "top5_paper";
}

std::vector<double> permutation_importance(const ProbModel& model, const Matrix& x, std::span<const int> y,
                                           std::size_t repeats, std::uint64_t seed) {
  if (x.rows() != y.size()) throw std::invalid_argument("permutation_importance: row/label count mismatch");
  if (x.rows() == 0) throw std::invalid_argument("permutation_importance: empty validation set");

  auto accuracy = [&](const Matrix& data) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      const int predicted = model.predict_proba(data.row(i)) >= 0.5 ? 1 : 0;
      if (predicted == y[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.rows());
  };

  const double baseline = accuracy(x);
  std::vector<double> importance(x.cols(), 0.0);
  std::vector<std::size_t> order(x.rows());
  for (std::size_t col = 0; col < x.cols(); ++col) {
    double drop = 0.0;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng rng(mix_seed(seed, col * repeats + rep));
      rng.shuffle(order);
      Matrix permuted = x;
      for (std::size_t i = 0; i < x.rows(); ++i) permuted(i, col) = x(order[i], col);
      drop += baseline - accuracy(permuted);
    }
    importance[col] = drop / static_cast<double>(std::max<std::size_t>(repeats, 1));
  }
  return importance;
}

std::vector<Feature> select_features(const SelectionRequest& request) {
  switch (request.mode) {
    case SelectionMode::kTop5Paper:
      return {kTop5Features.begin(), kTop5Features.end()};
    case SelectionMode::kAll17: {
      std::vector<Feature> all;
      for (std::size_t i = 0; i < kNumFeatures; ++i) all.push_back(static_cast<Feature>(i));
      return all;
    }
    case SelectionMode::kPermutationTopK: {
      if (request.model == nullptr) {
        throw std::invalid_argument("permutation_topk selection requires a trained model");
      }
      if (request.validation_x == nullptr || request.validation_x->cols() != kNumFeatures) {
        throw std::invalid_argument("permutation_topk selection requires a 17-column validation split");
      }
      if (request.k == 0 || request.k > kNumFeatures) {
        throw std::invalid_argument("permutation_topk: k must be in [1, 17]");
      }
      const auto importance = permutation_importance(*request.model, *request.validation_x,
                                                     request.validation_y, request.repeats, request.seed);
      std::vector<std::size_t> order(kNumFeatures);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });
      std::vector<Feature> out;
      for (std::size_t i = 0; i < request.k; ++i) out.push_back(static_cast<Feature>(order[i]));
      return out;
    }
  }
  return {};
}

Matrix project(std::span<const FeatureVector> vectors, std::span<const Feature> columns) {
  Matrix m(vectors.size(), columns.size());
  for (std::size_t r = 0; r < vectors.size(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) m(r, c) = vectors[r][columns[c]];
  }
  return m;
}

std::vector<std::string> column_names(std::span<const Feature> columns) {
  std::vector<std::string> names;
  for (Feature f : columns) names.emplace_back(feature_name(f));
  return names;
}

void write_feature_csv(std::ostream& out, std::span<const FeatureVector> vectors, std::string_view comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "participant_id,date";
  for (auto name : kFeatureNames) out << ',' << name;
  out << ",label\n";
  char buf[64];
  for (const auto& fv : vectors) {
    out << fv.participant_id << ',' << format_date(fv.date);
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      const double v = fv.values[i];
      if (is_count_feature(static_cast<Feature>(i))) {
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(std::llround(v)));
      } else {
        std::snprintf(buf, sizeof buf, "%.6f", v);
      }
      out << ',' << buf;
    }
    out << ',';
    if (fv.label) out << *fv.label;
    out << '\n';
  }
}

void write_feature_csv(const std::filesystem::path& path, std::span<const FeatureVector> vectors,
                       std::string_view comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write feature CSV: " + path.string());
  write_feature_csv(out, vectors, comment);
  if (!out) throw std::runtime_error("failed writing feature CSV: " + path.string());
}

std::vector<FeatureVector> read_feature_csv(std::istream& in) {
  std::vector<FeatureVector> out;
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_csv(line);
    if (!header_seen) {
      if (fields.size() != kNumFeatures + 3 || fields[0] != "participant_id" || fields[1] != "date" ||
          fields.back() != "label") {
        throw std::runtime_error("feature CSV line " + std::to_string(line_no) + ": unexpected header");
      }
      for (std::size_t i = 0; i < kNumFeatures; ++i) {
        if (fields[i + 2] != kFeatureNames[i]) {
          throw std::runtime_error("feature CSV header: expected column " + std::string(kFeatureNames[i]));
        }
      }
      header_seen = true;
      continue;
    }
    auto fail = [&](const std::string& what) {
      return std::runtime_error("feature CSV line " + std::to_string(line_no) + ": " + what);
    };
    if (fields.size() != kNumFeatures + 3) throw fail("expected " + std::to_string(kNumFeatures + 3) + " fields");
    FeatureVector fv;
    fv.participant_id = std::string(fields[0]);
    const auto date = parse_date(fields[1]);
    if (!date) throw fail("bad date '" + std::string(fields[1]) + "'");
    fv.date = *date;
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      const std::string text(fields[i + 2]);
      char* end = nullptr;
      const double v = std::strtod(text.c_str(), &end);
      if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
        throw fail("bad value for " + std::string(kFeatureNames[i]));
      }
      fv.values[i] = v;
    }
    const auto label = fields.back();
    if (label == "0" || label == "1") {
      fv.label = label == "1" ? 1 : 0;
    } else if (!label.empty()) {
      throw fail("label must be 0, 1 or empty");
    }
    out.push_back(std::move(fv));
  }
  if (!header_seen) throw std::runtime_error("feature CSV: missing header");
  return out;
}

std::vector<FeatureVector> read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read feature CSV: " + path.string());
  try {
    return read_feature_csv(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace cci
