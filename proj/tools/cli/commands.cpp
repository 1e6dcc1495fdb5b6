#include "cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "cci/event_model.hpp"
#include "cci/features.hpp"
#include "cci/harness.hpp"
#include "cci/svg_plot.hpp"

namespace cci::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<fs::path> csv_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

using LabelMap = std::map<std::pair<std::string, std::chrono::sys_days>, int>;

LabelMap read_labels(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  LabelMap labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != "participant_id,date,label") throw std::runtime_error(path.string() + ": missing labels header");
      header = true;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    const auto date = c2 == std::string::npos ? std::nullopt : parse_date(line.substr(c1 + 1, c2 - c1 - 1));
    const std::string value = c2 == std::string::npos ? "" : line.substr(c2 + 1);
    if (!date || (value != "0" && value != "1")) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": malformed label row");
    }
    labels[{line.substr(0, c1), std::chrono::sys_days{*date}}] = value == "1" ? 1 : 0;
  }
  return labels;
}

std::vector<FeatureVector> load_dataset(const fs::path& path) {
  auto rows = read_feature_csv(path);
  if (rows.empty()) throw std::runtime_error(path.string() + ": no feature rows");
  return rows;
}

fs::path or_default(const std::optional<fs::path>& p, const fs::path& fallback) { return p ? *p : fallback; }

std::vector<Feature> columns_of(const ProbModel& model) {
  std::vector<Feature> cols;
  for (const auto& name : model.feature_names()) {
    const auto f = parse_feature_name(name);
    if (!f) throw std::runtime_error("model uses unknown feature " + name);
    cols.push_back(*f);
  }
  return cols;
}

std::vector<FeatureVector> rows_at(std::span<const FeatureVector> rows, std::span<const std::size_t> idx) {
  std::vector<FeatureVector> out;
  for (auto i : idx) out.push_back(rows[i]);
  return out;
}

std::vector<int> labels_at(std::span<const FeatureVector> rows) {
  std::vector<int> y;
  for (const auto& r : rows) y.push_back(*r.label);
  return y;
}

std::string seed_comment(const SynthConfig& s) {
  return "seed=" + std::to_string(s.seed) + " generator=mt19937_64";
}

}  // namespace

CliConfig resolve_config(const GlobalOptions& options) {
  CliConfig c = options.config ? load_config(*options.config) : CliConfig{};
  if (options.seed) {
    c.synth.seed = *options.seed;
    c.experiment.base_seed = *options.seed;
    c.experiment.train.seed = *options.seed;
  }
  if (options.out) c.output_dir = *options.out;
  if (options.alpha) c.experiment.alpha = *options.alpha;
  if (options.runs) c.experiment.n_runs = *options.runs;
  if (options.quantile_rule) {
    const auto rule = parse_quantile_rule(*options.quantile_rule);
    if (!rule) throw ConfigError("unknown quantile rule '" + *options.quantile_rule + "'");
    c.experiment.quantile_rule = *rule;
  }
  try {
    for (const auto& m : resolved_methods(c)) m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

void cmd_generate(const CliConfig& config, std::ostream& out) {
  const auto dataset = generate_feature_dataset(config.synth);
  std::size_t positives = 0;
  for (const auto& r : dataset) positives += *r.label;
  fs::create_directories(config.output_dir);
  write_feature_csv(config.output_dir / "features.csv", dataset, seed_comment(config.synth));

  const auto logs = generate_event_logs(config.synth);
  std::ostringstream labels;
  labels << "# " << seed_comment(config.synth) << "\nparticipant_id,date,label\n";
  std::vector<FeatureVector> targets;
  for (const auto& log : logs) {
    std::ostringstream text;
    write_event_log(text, log.events, seed_comment(config.synth) + " participant=" + log.participant_id);
    write_text(config.output_dir / "logs" / (log.participant_id + ".csv"), text.str());
    for (const auto& t : log.targets) {
      labels << t.participant_id << ',' << format_date(t.date) << ',' << *t.label << '\n';
      targets.push_back(t);
    }
  }
  write_text(config.output_dir / "labels.csv", labels.str());
  write_feature_csv(config.output_dir / "log_targets.csv", targets, seed_comment(config.synth));
  out << "generated " << dataset.size() << " feature rows (" << positives << " positive) and " << logs.size()
      << " event logs in " << config.output_dir.string() << '\n';
}

void cmd_features(const fs::path& logs_dir, const std::optional<fs::path>& labels_path, const fs::path& output,
                  std::ostream& out) {
  const auto files = csv_files(logs_dir);
  if (files.empty()) throw std::runtime_error("no .csv event logs in " + logs_dir.string());
  const LabelMap labels = labels_path ? read_labels(*labels_path) : LabelMap{};

  std::vector<FeatureVector> rows;
  std::size_t valid = 0, skipped = 0;
  for (const auto& file : files) {
    const std::string pid = file.stem().string();
    auto parsed = parse_event_log(file);
    valid += parsed.events.size();
    skipped += parsed.skipped;
    HealthEvents health;
    for (const auto& [key, label] : labels) {
      if (key.first == pid && label == 1) health.insert(key.second);
    }
    const auto days = window_by_day(std::move(parsed.events), pid);
    auto features = extract_participant_features(days, health);
    for (auto& f : features) {
      const auto it = labels.find({pid, std::chrono::sys_days{f.date}});
      if (it != labels.end()) f.label = it->second;
    }
    rows.insert(rows.end(), features.begin(), features.end());
  }
  if (valid == 0) throw std::runtime_error("no valid events in " + logs_dir.string());
  if (output.has_parent_path()) fs::create_directories(output.parent_path());
  write_feature_csv(output, rows);
  out << "extracted " << rows.size() << " day rows from " << files.size() << " logs (" << valid << " events, "
      << skipped << " malformed lines skipped)\n";
}

void cmd_train(const CliConfig& config, const StageOptions& stage, std::ostream& out) {
  const auto dataset = load_dataset(or_default(stage.features, config.output_dir / "features.csv"));
  ExperimentConfig e = config.experiment;
  e.model = config.model;
  if (stage.model_kind) {
    const auto kind = parse_model_kind(*stage.model_kind);
    if (!kind) throw UsageError("unknown model '" + *stage.model_kind + "'");
    e.model = *kind;
  }
  e.uq = UqMethod::kNone;
  const auto s = split(dataset, e, e.base_seed);
  const auto train_rows = rows_at(dataset, s.train);
  const auto y = labels_at(train_rows);
  TrainConfig tc = e.train;
  tc.seed = e.base_seed;
  const auto columns = choose_features(train_rows, e, tc, e.base_seed);
  const Matrix x = project(train_rows, columns);
  if (e.grid_search) tc = grid_search(e.model, x, y, tc);
  const auto model = fit_model(e.model, x, y, column_names(columns), tc);
  const fs::path path = or_default(stage.output, config.output_dir / "model.json");
  write_text(path, model.to_json() + "\n");
  for (const auto& w : model.warnings()) out << "warning: " << w << '\n';
  out << "trained " << to_string(e.model) << " on " << train_rows.size() << " rows -> " << path.string() << '\n';
}

void cmd_calibrate(const CliConfig& config, const StageOptions& stage, std::ostream& out) {
  const auto dataset = load_dataset(or_default(stage.features, config.output_dir / "features.csv"));
  const auto model = ProbModel::from_json(read_text(or_default(stage.model, config.output_dir / "model.json")));
  const auto s = split(dataset, config.experiment, config.experiment.base_seed);
  const auto rows = rows_at(dataset, s.calibration);
  const auto probs = model.predict_proba(project(rows, columns_of(model)));
  const auto calib = calibrate(probs, labels_at(rows), config.experiment.alpha, config.experiment.quantile_rule);
  const fs::path path = or_default(stage.output, config.output_dir / "calibration.json");
  write_text(path, calib.to_json() + "\n");
  out << "calibrated on " << rows.size() << " rows: q_hat = " << calib.q_hat << " -> " << path.string() << '\n';
}

void cmd_predict(const CliConfig& config, const StageOptions& stage, std::ostream& out) {
  const auto dataset = load_dataset(or_default(stage.features, config.output_dir / "features.csv"));
  const auto model = ProbModel::from_json(read_text(or_default(stage.model, config.output_dir / "model.json")));
  const UqMethod uq = [&] {
    if (!stage.uq) return UqMethod::kCci;
    const auto parsed = parse_uq_method(*stage.uq);
    if (!parsed) throw UsageError("unknown uq method '" + *stage.uq + "'");
    return *parsed;
  }();
  if (uq == UqMethod::kNaive && model.kind() != ModelKind::kForest) {
    throw UsageError("naive intervals need a forest model");
  }
  std::optional<CalibrationResult> calib;
  if (uq == UqMethod::kCci) {
    calib = CalibrationResult::from_json(
        read_text(or_default(stage.calibration, config.output_dir / "calibration.json")));
  }

  std::vector<FeatureVector> rows;
  if (stage.all_rows) {
    rows = dataset;
  } else {
    rows = rows_at(dataset, split(dataset, config.experiment, config.experiment.base_seed).test);
  }
  const Matrix x = project(rows, columns_of(model));
  const double alpha = calib ? calib->alpha : config.experiment.alpha;
  std::vector<PredictionRow> predictions;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    PredictionRow p;
    p.participant_id = rows[i].participant_id;
    p.date = rows[i].date;
    p.p_hat = model.predict_proba(x.row(i));
    p.label = rows[i].label.value_or(0);
    switch (uq) {
      case UqMethod::kNone:
        p.interval = {p.p_hat, p.p_hat};
        p.outcome = decide_point(p.p_hat);
        break;
      case UqMethod::kNaive:
        p.interval = naive_interval(model.tree_probas(x.row(i)));
        p.outcome = decide(p.interval, alpha).outcome;
        break;
      case UqMethod::kCci:
        p.interval = cci_interval(p.p_hat, *calib).interval;
        p.outcome = decide(p.interval, alpha).outcome;
        break;
    }
    predictions.push_back(std::move(p));
  }
  const fs::path path = or_default(stage.output, config.output_dir / "predictions.csv");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_predictions_csv(path, predictions);
  out << "wrote " << predictions.size() << " predictions -> " << path.string() << '\n';
}

void cmd_run(const CliConfig& config, std::ostream& out) {
  const auto dataset = config.dataset ? load_dataset(*config.dataset) : generate_feature_dataset(config.synth);
  const auto methods = resolved_methods(config);
  const auto results = compare_methods(dataset, methods);
  write_reports(config.output_dir, results, dataset);
  out << table1_text(results);
}

void cmd_plot(const fs::path& predictions, const fs::path& out_dir, std::ostream& out) {
  std::vector<fs::path> inputs;
  if (fs::is_directory(predictions)) {
    inputs = csv_files(predictions);
    if (inputs.empty()) throw std::runtime_error("no prediction files in " + predictions.string());
  } else {
    inputs.push_back(predictions);
  }
  std::size_t written = 0;
  for (const auto& file : inputs) {
    std::vector<PredictionRow> rows;
    try {
      rows = read_predictions_csv(file);
    } catch (const PredictionsFormatError& e) {
      throw std::runtime_error(file.string() + ": " + e.what());
    }
    written += write_interval_plots(rows, out_dir, file.stem().string()).size();
  }
  out << "wrote " << written << " SVG files -> " << out_dir.string() << '\n';
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"cci: conformal-calibrated intervals for smart-home UTI detection"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  std::string config_path, out_path, quantile_rule;
  std::uint64_t seed = 0;
  double alpha = 0.1;
  std::size_t runs = 0;
  auto* o_config = app.add_option("--config", config_path, "JSON config file");
  auto* o_seed = app.add_option("--seed", seed, "Seed override (synthetic data, splits, models)");
  auto* o_out = app.add_option("--out", out_path, "Output directory override");
  auto* o_alpha = app.add_option("--alpha", alpha, "Error rate alpha")->check(CLI::Range(0.0, 1.0));
  auto* o_runs = app.add_option("--runs", runs, "Number of runs")->check(CLI::PositiveNumber);
  auto* o_rule = app.add_option("--quantile-rule", quantile_rule, "paper_eq4 or split_conformal")
                     ->check(CLI::IsMember({"paper_eq4", "split_conformal"}));

  auto* generate = app.add_subcommand("generate", "Write synthetic event logs, labels and a feature dataset");

  auto* features = app.add_subcommand("features", "Extract day features from a directory of event logs");
  std::string logs_dir, labels_file, features_out;
  features->add_option("--logs", logs_dir, "Directory of <participant>.csv event logs")->required();
  features->add_option("--labels", labels_file, "participant_id,date,label file");
  features->add_option("--output", features_out, "Feature CSV to write")->required();

  StageOptions stage;
  std::string s_features, s_model, s_calibration, s_output, s_kind, s_uq;
  auto add_stage = [&](CLI::App* sub) {
    sub->add_option("--features", s_features, "Feature CSV (default <out>/features.csv)");
    sub->add_option("--output", s_output, "File to write");
  };
  auto* train = app.add_subcommand("train", "Fit a model on the train split of run 0");
  add_stage(train);
  train->add_option("--model", s_kind, "logistic, mlp, forest or random_guess");
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Compute q_hat on the calibration split of run 0");
  add_stage(calibrate_cmd);
  calibrate_cmd->add_option("--model", s_model, "Model JSON (default <out>/model.json)");
  auto* predict = app.add_subcommand("predict", "Write interval predictions for the test split of run 0");
  add_stage(predict);
  predict->add_option("--model", s_model, "Model JSON (default <out>/model.json)");
  predict->add_option("--calibration", s_calibration, "Calibration JSON (default <out>/calibration.json)");
  predict->add_option("--uq", s_uq, "none, naive or cci (default cci)");
  predict->add_flag("--all", stage.all_rows, "Predict every row instead of the test split");

  auto* run = app.add_subcommand("run", "Run the repeated-split comparison and write reports");

  auto* plot = app.add_subcommand("plot", "Render interval plots from a predictions file or directory");
  std::string predictions_path;
  plot->add_option("--predictions", predictions_path, "Predictions CSV or directory of them")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kUsageError;
  }

  if (*o_config) g.config = config_path;
  if (*o_seed) g.seed = seed;
  if (*o_out) g.out = out_path;
  if (*o_alpha) g.alpha = alpha;
  if (*o_runs) g.runs = runs;
  if (*o_rule) g.quantile_rule = quantile_rule;
  if (!s_features.empty()) stage.features = s_features;
  if (!s_model.empty()) stage.model = s_model;
  if (!s_calibration.empty()) stage.calibration = s_calibration;
  if (!s_output.empty()) stage.output = s_output;
  if (!s_kind.empty()) stage.model_kind = s_kind;
  if (!s_uq.empty()) stage.uq = s_uq;

  try {
    const bool needs_config = generate->parsed() || run->parsed();
    if (needs_config && !g.config) throw UsageError("--config is required for this command");
    if (g.config && !fs::is_regular_file(*g.config)) throw UsageError("config not found: " + g.config->string());

    if (features->parsed()) {
      cmd_features(logs_dir, labels_file.empty() ? std::nullopt : std::optional<fs::path>(labels_file),
                   features_out, out);
      return kOk;
    }
    if (plot->parsed()) {
      const fs::path dir = g.out ? *g.out : resolve_config(g).output_dir / "plots";
      cmd_plot(predictions_path, dir, out);
      return kOk;
    }
    const CliConfig config = resolve_config(g);
    if (generate->parsed()) cmd_generate(config, out);
    if (train->parsed()) cmd_train(config, stage, out);
    if (calibrate_cmd->parsed()) cmd_calibrate(config, stage, out);
    if (predict->parsed()) cmd_predict(config, stage, out);
    if (run->parsed()) cmd_run(config, out);
    return kOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace cci::cli
