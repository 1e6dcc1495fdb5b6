#include "cci/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include "json.hpp"
#include <sstream>
#include <stdexcept>

#include "cci/rng.hpp"

namespace cci {

namespace {

using nlohmann::json;

std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

std::vector<int> labels_of(std::span<const FeatureVector> rows, std::span<const std::size_t> idx) {
  std::vector<int> y;
  y.reserve(idx.size());
  for (auto i : idx) y.push_back(*rows[i].label);
  return y;
}

std::vector<FeatureVector> gather(std::span<const FeatureVector> rows, std::span<const std::size_t> idx) {
  std::vector<FeatureVector> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(rows[i]);
  return out;
}

SplitIndices stratified_split(std::span<const FeatureVector> dataset, const SplitSizes& sizes, Rng& rng) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < dataset.size(); ++i) (*dataset[i].label == 1 ? pos : neg).push_back(i);
  rng.shuffle(pos);
  rng.shuffle(neg);

  // Take `n` rows keeping the class ratio of what is left.
  auto take = [&](std::size_t n, std::vector<std::size_t>& out) {
    const std::size_t left = pos.size() + neg.size();
    std::size_t n_pos = left == 0 ? 0 : round_half_up(static_cast<double>(n) * pos.size() / left);
    n_pos = std::min(n_pos, pos.size());
    if (n - n_pos > neg.size()) n_pos = n - neg.size();
    const std::size_t n_neg = n - n_pos;
    out.insert(out.end(), pos.end() - static_cast<std::ptrdiff_t>(n_pos), pos.end());
    out.insert(out.end(), neg.end() - static_cast<std::ptrdiff_t>(n_neg), neg.end());
    pos.resize(pos.size() - n_pos);
    neg.resize(neg.size() - n_neg);
  };

  SplitIndices s;
  take(sizes.test, s.test);
  take(sizes.calibration, s.calibration);
  s.train = pos;
  s.train.insert(s.train.end(), neg.begin(), neg.end());
  return s;
}

SplitIndices participant_split(std::span<const FeatureVector> dataset, const SplitSizes& sizes, Rng& rng) {
  std::map<std::string, std::vector<std::size_t>> by_id;
  for (std::size_t i = 0; i < dataset.size(); ++i) by_id[dataset[i].participant_id].push_back(i);
  std::vector<std::string> ids;
  for (const auto& [id, rows] : by_id) ids.push_back(id);
  rng.shuffle(ids);

  SplitIndices s;
  for (const auto& id : ids) {
    auto& rows = by_id[id];
    auto& dest = s.test.size() < sizes.test                ? s.test
                 : s.calibration.size() < sizes.calibration ? s.calibration
                                                            : s.train;
    dest.insert(dest.end(), rows.begin(), rows.end());
  }
  return s;
}

MeanStdStat stat_of(const std::vector<double>& xs) {
  MeanStdStat s;
  s.n = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return s;
}

std::optional<MeanStdStat> optional_stat(std::span<const RunRecord> runs,
                                         const std::function<std::optional<double>(const RunRecord&)>& get) {
  std::vector<double> xs;
  bool any = false;
  for (const auto& r : runs) {
    const auto v = get(r);
    if (!v) continue;
    any = true;
    if (std::isfinite(*v)) xs.push_back(*v);
  }
  if (!any) return std::nullopt;
  return stat_of(xs);
}

json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json stat_json(const MeanStdStat& s) { return json{{"mean", s.mean}, {"std", s.std}, {"n_runs", s.n}}; }

std::string fixed(double v, int digits = 6) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string opt_fixed(const std::optional<double>& v) { return v ? fixed(*v) : std::string(); }

std::string cell(const MeanStdStat& s) { return fixed(s.mean, 2) + " ± " + fixed(s.std, 2); }
std::string cell(const std::optional<MeanStdStat>& s) { return s ? cell(*s) : std::string("-"); }

std::string pad(std::string s, std::size_t width) {
  // Count code points so the plus-minus sign occupies one column.
  std::size_t shown = 0;
  for (unsigned char c : s) shown += (c & 0xC0) != 0x80;
  if (shown < width) s.append(width - shown, ' ');
  return s;
}

std::string run_file_name(const std::string& method, std::size_t run) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_run%02zu.csv", run);
  return method + buf;
}

}  // namespace

std::string_view to_string(UqMethod method) {
  switch (method) {
    case UqMethod::kNone: return "none";
    case UqMethod::kNaive: return "naive";
    case UqMethod::kCci: return "cci";
  }
  return "none";
}

std::optional<UqMethod> parse_uq_method(std::string_view text) {
  if (text == "none") return UqMethod::kNone;
  if (text == "naive") return UqMethod::kNaive;
  if (text == "cci") return UqMethod::kCci;
  return std::nullopt;
}

std::string_view to_string(SplitMode mode) {
  return mode == SplitMode::kByParticipant ? "by_participant" : "stratified";
}

std::optional<SplitMode> parse_split_mode(std::string_view text) {
  if (text == "stratified") return SplitMode::kStratified;
  if (text == "by_participant") return SplitMode::kByParticipant;
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  if (name.empty()) throw std::invalid_argument("experiment name must not be empty");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw std::invalid_argument("test_fraction must lie in (0, 1)");
  if (!(calib_fraction_of_remainder > 0.0 && calib_fraction_of_remainder < 1.0)) {
    throw std::invalid_argument("calib_fraction_of_remainder must lie in (0, 1)");
  }
  if (n_runs == 0) throw std::invalid_argument("n_runs must be at least 1");
  if (uq == UqMethod::kNaive && model != ModelKind::kForest) {
    throw std::invalid_argument("naive intervals need per-tree probabilities; use model forest");
  }
  if (feature_mode == SelectionMode::kPermutationTopK && (top_k == 0 || top_k > kNumFeatures)) {
    throw std::invalid_argument("top_k must lie in [1, 17]");
  }
  train.validate();
}

std::vector<ExperimentConfig> default_methods(const ExperimentConfig& shared) {
  std::vector<ExperimentConfig> out;
  auto add = [&](std::string name, ModelKind model, UqMethod uq) {
    ExperimentConfig c = shared;
    c.name = std::move(name);
    c.model = model;
    c.uq = uq;
    out.push_back(std::move(c));
  };
  add("random_guess", ModelKind::kRandomGuess, UqMethod::kNone);
  add("base", ModelKind::kLogistic, UqMethod::kNone);
  add("naive", ModelKind::kForest, UqMethod::kNaive);
  add("cci", ModelKind::kLogistic, UqMethod::kCci);
  return out;
}

SplitSizes split_sizes(std::size_t n, double test_fraction, double calib_fraction_of_remainder) {
  SplitSizes s;
  s.test = std::min(n, round_half_up(test_fraction * static_cast<double>(n)));
  s.calibration = std::min(n - s.test, round_half_up(calib_fraction_of_remainder * static_cast<double>(n - s.test)));
  s.train = n - s.test - s.calibration;
  return s;
}

SplitIndices split(std::span<const FeatureVector> dataset, const ExperimentConfig& config, std::uint64_t run_seed) {
  if (dataset.size() < 10) throw std::invalid_argument("split needs at least 10 rows");
  for (const auto& r : dataset) {
    if (!r.label || (*r.label != 0 && *r.label != 1)) {
      throw std::invalid_argument("split needs a 0/1 label on every row");
    }
  }
  const auto sizes = split_sizes(dataset.size(), config.test_fraction, config.calib_fraction_of_remainder);
  Rng rng(mix_seed(run_seed, 0x73706c6974));
  SplitIndices s = config.split_mode == SplitMode::kByParticipant ? participant_split(dataset, sizes, rng)
                                                                  : stratified_split(dataset, sizes, rng);
  if (s.train.empty() || s.calibration.empty() || s.test.empty()) {
    throw std::invalid_argument("split produced an empty train, calibration or test set");
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.calibration.begin(), s.calibration.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

AggregateReport aggregate_runs(std::span<const RunRecord> runs) {
  AggregateReport a;
  auto collect = [&](auto get) {
    std::vector<double> xs;
    for (const auto& r : runs) xs.push_back(get(r));
    return stat_of(xs);
  };
  a.accuracy = collect([](const RunRecord& r) { return r.report.accuracy; });
  a.precision = collect([](const RunRecord& r) { return r.report.precision; });
  a.recall = collect([](const RunRecord& r) { return r.report.recall; });
  a.f1 = collect([](const RunRecord& r) { return r.report.f1; });
  a.abstention = collect([](const RunRecord& r) { return r.report.abstention_proportion; });
  a.width_all = optional_stat(runs, [](const RunRecord& r) { return r.report.width_all; });
  a.width_decided = optional_stat(runs, [](const RunRecord& r) { return r.report.width_decided; });
  a.coverage = optional_stat(runs, [](const RunRecord& r) { return r.report.coverage; });
  a.center_coverage = optional_stat(runs, [](const RunRecord& r) { return r.center_coverage; });
  a.q_hat = optional_stat(runs, [](const RunRecord& r) { return r.q_hat; });
  for (const auto& r : runs) a.undefined_runs += r.report.metrics_undefined ? 1 : 0;
  return a;
}

std::vector<Feature> choose_features(std::span<const FeatureVector> train_rows, const ExperimentConfig& config,
                                     const TrainConfig& tc, std::uint64_t seed) {
  SelectionRequest request;
  request.mode = config.feature_mode;
  request.k = config.top_k;
  request.seed = seed;
  std::optional<ProbModel> ranker;
  Matrix inner_val_x;
  std::vector<int> inner_val_y;
  if (config.feature_mode == SelectionMode::kPermutationTopK) {
    // Rank on an inner holdout carved from the training rows only.
    ExperimentConfig inner = config;
    inner.test_fraction = 0.25;
    inner.calib_fraction_of_remainder = 0.5;
    inner.split_mode = SplitMode::kStratified;
    std::vector<std::size_t> fit_idx, val_idx;
    if (train_rows.size() >= 10) {
      const auto inner_split = split(train_rows, inner, mix_seed(seed, 0x72616e6b));
      val_idx = inner_split.test;
      fit_idx = inner_split.train;
      fit_idx.insert(fit_idx.end(), inner_split.calibration.begin(), inner_split.calibration.end());
      std::sort(fit_idx.begin(), fit_idx.end());
    } else {
      for (std::size_t i = 0; i < train_rows.size(); ++i) (i % 4 == 3 ? val_idx : fit_idx).push_back(i);
    }
    std::vector<Feature> all(kNumFeatures);
    for (std::size_t f = 0; f < kNumFeatures; ++f) all[f] = static_cast<Feature>(f);
    const auto fit_rows = gather(train_rows, fit_idx);
    const auto val_rows = gather(train_rows, val_idx);
    ranker = fit_model(config.model, project(fit_rows, all), labels_of(train_rows, fit_idx), column_names(all), tc);
    inner_val_x = project(val_rows, all);
    inner_val_y = labels_of(train_rows, val_idx);
    request.model = &*ranker;
    request.validation_x = &inner_val_x;
    request.validation_y = inner_val_y;
  }
  return select_features(request);
}

RunRecord run_once(std::span<const FeatureVector> dataset, const ExperimentConfig& config, std::size_t run) {
  RunRecord rec;
  rec.run = run;
  rec.seed = config.base_seed + run;
  const SplitIndices s = split(dataset, config, rec.seed);
  rec.sizes = SplitSizes{s.train.size(), s.calibration.size(), s.test.size()};

  const auto train_rows = gather(dataset, s.train);
  const auto y_train = labels_of(dataset, s.train);
  TrainConfig tc = config.train;
  tc.seed = rec.seed;

  const auto columns = choose_features(train_rows, config, tc, rec.seed);
  rec.features = column_names(columns);

  const Matrix x_train = project(train_rows, columns);
  if (config.grid_search) tc = grid_search(config.model, x_train, y_train, tc);
  const ProbModel model = fit_model(config.model, x_train, y_train, rec.features, tc);

  const auto test_rows = gather(dataset, s.test);
  const auto y_test = labels_of(dataset, s.test);
  const Matrix x_test = project(test_rows, columns);
  const auto p_test = model.predict_proba(x_test);

  std::vector<Outcome> outcomes;
  std::vector<ProbInterval> intervals;
  std::optional<double> coverage;
  switch (config.uq) {
    case UqMethod::kNone:
      for (double p : p_test) outcomes.push_back(decide_point(p));
      break;
    case UqMethod::kNaive:
      for (std::size_t i = 0; i < x_test.rows(); ++i) {
        intervals.push_back(naive_interval(model.tree_probas(x_test.row(i))));
        outcomes.push_back(decide(intervals.back(), config.alpha).outcome);
      }
      break;
    case UqMethod::kCci: {
      const auto cal_rows = gather(dataset, s.calibration);
      const auto p_cal = model.predict_proba(project(cal_rows, columns));
      const auto calib = calibrate(p_cal, labels_of(dataset, s.calibration), config.alpha, config.quantile_rule);
      rec.q_hat = calib.q_hat;
      for (double p : p_test) {
        intervals.push_back(cci_interval(p, calib).interval);
        outcomes.push_back(decide(intervals.back(), config.alpha).outcome);
      }
      coverage = empirical_coverage(p_test, y_test, calib);
      rec.center_coverage = center_coverage(p_test, y_test, calib);
      break;
    }
  }
  rec.report = evaluate(outcomes, y_test, intervals, coverage);

  for (std::size_t i = 0; i < test_rows.size(); ++i) {
    PredictionRow row;
    row.participant_id = test_rows[i].participant_id;
    row.date = test_rows[i].date;
    row.p_hat = p_test[i];
    row.interval = intervals.empty() ? ProbInterval{p_test[i], p_test[i]} : intervals[i];
    row.outcome = outcomes[i];
    row.label = y_test[i];
    rec.predictions.push_back(std::move(row));
  }
  return rec;
}

ExperimentResult run_experiment(std::span<const FeatureVector> dataset, const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  result.config = config;
  for (std::size_t run = 0; run < config.n_runs; ++run) {
    try {
      result.runs.push_back(run_once(dataset, config, run));
    } catch (const std::exception& e) {
      throw std::runtime_error(config.name + ": run " + std::to_string(run) + " (seed " +
                               std::to_string(config.base_seed + run) + ") failed: " + e.what());
    }
  }
  result.aggregate = aggregate_runs(result.runs);
  return result;
}

std::vector<ExperimentResult> compare_methods(std::span<const FeatureVector> dataset,
                                              std::span<const ExperimentConfig> configs) {
  if (configs.empty()) throw std::invalid_argument("compare_methods needs at least one config");
  const auto& first = configs.front();
  for (const auto& c : configs) {
    if (c.base_seed != first.base_seed || c.n_runs != first.n_runs || c.test_fraction != first.test_fraction ||
        c.calib_fraction_of_remainder != first.calib_fraction_of_remainder || c.split_mode != first.split_mode) {
      throw std::invalid_argument("compare_methods: configs must share seeds, runs and split settings");
    }
  }
  std::vector<ExperimentResult> out;
  for (const auto& c : configs) out.push_back(run_experiment(dataset, c));
  return out;
}

std::string report_json(std::span<const ExperimentResult> results, std::span<const FeatureVector> dataset) {
  json doc;
  std::size_t positives = 0;
  for (const auto& r : dataset) positives += r.label && *r.label == 1 ? 1 : 0;
  doc["dataset"] = {{"n_rows", dataset.size()}, {"n_positive", positives}};
  json methods = json::array();
  for (const auto& res : results) {
    const auto& c = res.config;
    json m;
    m["name"] = c.name;
    m["model"] = std::string(to_string(c.model));
    m["uq"] = std::string(to_string(c.uq));
    m["alpha"] = c.alpha;
    m["quantile_rule"] = std::string(to_string(c.quantile_rule));
    m["feature_mode"] = std::string(to_string(c.feature_mode));
    m["split_mode"] = std::string(to_string(c.split_mode));
    m["n_runs"] = c.n_runs;
    m["base_seed"] = c.base_seed;
    const auto& a = res.aggregate;
    json agg;
    agg["accuracy"] = stat_json(a.accuracy);
    agg["precision"] = stat_json(a.precision);
    agg["recall"] = stat_json(a.recall);
    agg["f1"] = stat_json(a.f1);
    agg["abstention_proportion"] = stat_json(a.abstention);
    if (a.width_all) agg["width_all"] = stat_json(*a.width_all);
    if (a.width_decided) agg["width_decided"] = stat_json(*a.width_decided);
    if (a.coverage) agg["coverage"] = stat_json(*a.coverage);
    if (a.center_coverage) agg["center_coverage"] = stat_json(*a.center_coverage);
    if (a.q_hat) agg["q_hat"] = stat_json(*a.q_hat);
    agg["undefined_runs"] = a.undefined_runs;
    m["aggregate"] = agg;
    json runs = json::array();
    for (const auto& r : res.runs) {
      json j;
      j["run"] = r.run;
      j["seed"] = r.seed;
      j["n_train"] = r.sizes.train;
      j["n_calibration"] = r.sizes.calibration;
      j["n_test"] = r.sizes.test;
      j["features"] = r.features;
      j["accuracy"] = r.report.accuracy;
      j["precision"] = r.report.precision;
      j["recall"] = r.report.recall;
      j["f1"] = r.report.f1;
      j["metrics_undefined"] = r.report.metrics_undefined;
      j["abstention_proportion"] = r.report.abstention_proportion;
      if (r.report.width_all) j["width_all"] = *r.report.width_all;
      if (r.report.width_decided) j["width_decided"] = *r.report.width_decided;
      if (r.report.coverage) j["coverage"] = *r.report.coverage;
      if (r.center_coverage) j["center_coverage"] = *r.center_coverage;
      if (r.q_hat) j["q_hat"] = number_or_inf(*r.q_hat);
      const auto& cm = r.report.confusion;
      j["confusion"] = {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}};
      runs.push_back(j);
    }
    m["runs"] = runs;
    methods.push_back(m);
  }
  doc["methods"] = methods;
  return doc.dump(2) + "\n";
}

std::string report_csv(std::span<const ExperimentResult> results) {
  std::ostringstream s;
  s << "method,run,seed,n_train,n_calibration,n_test,accuracy,precision,recall,f1,metrics_undefined,"
       "abstention_proportion,width_all,width_decided,coverage,center_coverage,q_hat,tp,fp,fn,tn\n";
  for (const auto& res : results) {
    for (const auto& r : res.runs) {
      const auto& e = r.report;
      s << res.config.name << ',' << r.run << ',' << r.seed << ',' << r.sizes.train << ',' << r.sizes.calibration
        << ',' << r.sizes.test << ',' << fixed(e.accuracy) << ',' << fixed(e.precision) << ',' << fixed(e.recall)
        << ',' << fixed(e.f1) << ',' << (e.metrics_undefined ? 1 : 0) << ',' << fixed(e.abstention_proportion)
        << ',' << opt_fixed(e.width_all) << ',' << opt_fixed(e.width_decided) << ',' << opt_fixed(e.coverage)
        << ',' << opt_fixed(r.center_coverage) << ',' << opt_fixed(r.q_hat) << ',' << e.confusion.tp << ','
        << e.confusion.fp << ',' << e.confusion.fn << ',' << e.confusion.tn << '\n';
    }
  }
  return s.str();
}

std::string table1_text(std::span<const ExperimentResult> results) {
  std::ostringstream s;
  if (!results.empty()) {
    const auto& c = results.front().config;
    s << "alpha=" << fixed(c.alpha, 2) << " runs=" << c.n_runs << " base_seed=" << c.base_seed
      << " quantile_rule=" << to_string(c.quantile_rule) << " features=" << to_string(c.feature_mode) << "\n\n";
  }
  const std::vector<std::pair<std::string, std::size_t>> cols = {
      {"Method", 14},    {"Model", 14},  {"UQ", 7},          {"Accuracy", 14},       {"Precision", 14},
      {"Recall", 14},    {"F1", 14},     {"Abstention", 14}, {"Interval Width", 16}, {"Coverage", 14}};
  for (const auto& [name, w] : cols) s << pad(name, w);
  s << '\n';
  for (const auto& res : results) {
    const auto& a = res.aggregate;
    const std::vector<std::string> cells = {res.config.name,
                                            std::string(to_string(res.config.model)),
                                            std::string(to_string(res.config.uq)),
                                            cell(a.accuracy),
                                            cell(a.precision),
                                            cell(a.recall),
                                            cell(a.f1),
                                            res.config.uq == UqMethod::kNone ? std::string("-") : cell(a.abstention),
                                            cell(a.width_all),
                                            cell(a.coverage)};
    for (std::size_t i = 0; i < cols.size(); ++i) s << pad(cells[i], cols[i].second);
    s << '\n';
  }
  std::string out = s.str();
  // Trailing pad spaces are noise in diffs.
  std::string trimmed;
  std::istringstream lines(out);
  for (std::string line; std::getline(lines, line);) {
    while (!line.empty() && line.back() == ' ') line.pop_back();
    trimmed += line + '\n';
  }
  return trimmed;
}

void write_reports(const std::filesystem::path& out_dir, std::span<const ExperimentResult> results,
                   std::span<const FeatureVector> dataset) {
  std::filesystem::create_directories(out_dir / "predictions");
  auto write = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
  };
  write(out_dir / "report.json", report_json(results, dataset));
  write(out_dir / "report.csv", report_csv(results));
  write(out_dir / "table1.txt", table1_text(results));
  for (const auto& res : results) {
    if (res.config.uq == UqMethod::kNone) continue;
    for (const auto& r : res.runs) {
      write_predictions_csv(out_dir / "predictions" / run_file_name(res.config.name, r.run), r.predictions);
    }
  }
}

}  // namespace cci
