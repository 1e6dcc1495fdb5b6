#include "cli/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace cci::cli {

namespace {

using nlohmann::json;

void only_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& obj, std::string_view where, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + "." + key + ": wrong type");
  }
}

std::string read_string(const json& obj, std::string_view where, const char* key, std::string fallback) {
  read(obj, where, key, fallback);
  return fallback;
}

template <typename E, typename Parse>
E read_enum(const json& obj, std::string_view where, const char* key, E fallback, Parse parse) {
  if (!obj.contains(key)) return fallback;
  const auto text = read_string(obj, where, key, "");
  const auto parsed = parse(text);
  if (!parsed) throw ConfigError(std::string(where) + "." + key + ": unknown value '" + text + "'");
  return *parsed;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

void parse_synth(const json& j, SynthConfig& s) {
  constexpr std::string_view w = "synth";
  only_keys(j, w, {"seed", "n_participants", "days_per_participant", "participant_days", "uti_day_fraction",
                   "effect_sizes", "noise_scale"});
  read(j, w, "seed", s.seed);
  read(j, w, "n_participants", s.n_participants);
  read(j, w, "days_per_participant", s.days_per_participant);
  if (j.contains("days_per_participant") && !j.contains("participant_days")) s.participant_days.clear();
  read(j, w, "participant_days", s.participant_days);
  if (j.contains("n_participants") && !j.contains("participant_days") && !j.contains("days_per_participant") &&
      s.participant_days.size() != s.n_participants) {
    throw ConfigError("synth: n_participants differs from the default participant_days; set participant_days or "
                      "days_per_participant");
  }
  read(j, w, "uti_day_fraction", s.uti_day_fraction);
  if (j.contains("effect_sizes")) {
    s.effect_sizes.clear();
    read(j, w, "effect_sizes", s.effect_sizes);
  }
  read(j, w, "noise_scale", s.noise_scale);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("synth: ") + e.what());
  }
}

void parse_train(const json& j, CliConfig& c) {
  constexpr std::string_view w = "train";
  only_keys(j, w, {"model", "seed", "grid_search", "logistic", "mlp", "forest"});
  c.model = read_enum(j, w, "model", c.model, parse_model_kind);
  TrainConfig& t = c.experiment.train;
  read(j, w, "seed", t.seed);
  read(j, w, "grid_search", c.experiment.grid_search);
  if (j.contains("logistic")) {
    const auto& l = j.at("logistic");
    only_keys(l, "train.logistic", {"C", "max_iters", "tol"});
    read(l, "train.logistic", "C", t.logistic.inverse_reg_c);
    read(l, "train.logistic", "max_iters", t.logistic.max_iters);
    read(l, "train.logistic", "tol", t.logistic.tol);
  }
  if (j.contains("mlp")) {
    const auto& m = j.at("mlp");
    only_keys(m, "train.mlp", {"hidden", "l2_alpha", "learning_rate", "max_epochs", "tol"});
    read(m, "train.mlp", "hidden", t.mlp.hidden);
    read(m, "train.mlp", "l2_alpha", t.mlp.l2_alpha);
    read(m, "train.mlp", "learning_rate", t.mlp.learning_rate);
    read(m, "train.mlp", "max_epochs", t.mlp.max_epochs);
    read(m, "train.mlp", "tol", t.mlp.tol);
  }
  if (j.contains("forest")) {
    const auto& f = j.at("forest");
    only_keys(f, "train.forest", {"n_trees", "max_depth", "min_leaf", "bootstrap"});
    read(f, "train.forest", "n_trees", t.forest.n_trees);
    read(f, "train.forest", "max_depth", t.forest.max_depth);
    read(f, "train.forest", "min_leaf", t.forest.min_leaf);
    read(f, "train.forest", "bootstrap", t.forest.bootstrap);
  }
}

void parse_experiment(const json& j, CliConfig& c, const std::filesystem::path& base) {
  constexpr std::string_view w = "experiment";
  only_keys(j, w, {"dataset", "alpha", "test_fraction", "calib_fraction_of_remainder", "n_runs", "base_seed",
                   "feature_mode", "top_k", "quantile_rule", "split_mode", "methods"});
  ExperimentConfig& e = c.experiment;
  if (j.contains("dataset")) c.dataset = resolve(base, read_string(j, w, "dataset", ""));
  read(j, w, "alpha", e.alpha);
  read(j, w, "test_fraction", e.test_fraction);
  read(j, w, "calib_fraction_of_remainder", e.calib_fraction_of_remainder);
  read(j, w, "n_runs", e.n_runs);
  read(j, w, "base_seed", e.base_seed);
  e.feature_mode = read_enum(j, w, "feature_mode", e.feature_mode, parse_selection_mode);
  read(j, w, "top_k", e.top_k);
  e.quantile_rule = read_enum(j, w, "quantile_rule", e.quantile_rule, parse_quantile_rule);
  e.split_mode = read_enum(j, w, "split_mode", e.split_mode, parse_split_mode);
  if (j.contains("methods")) {
    const auto& arr = j.at("methods");
    if (!arr.is_array() || arr.empty()) throw ConfigError("experiment.methods: expected a non-empty array");
    for (const auto& m : arr) {
      only_keys(m, "experiment.methods[]", {"name", "model", "uq"});
      ExperimentConfig mc;
      mc.name = read_string(m, "experiment.methods[]", "name", "");
      if (mc.name.empty()) throw ConfigError("experiment.methods[]: name is required");
      mc.model = read_enum(m, "experiment.methods[]", "model", ModelKind::kLogistic, parse_model_kind);
      mc.uq = read_enum(m, "experiment.methods[]", "uq", UqMethod::kNone, parse_uq_method);
      c.methods.push_back(mc);
    }
  }
}

}  // namespace

CliConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  only_keys(doc, "config", {"output_dir", "synth", "train", "experiment"});
  CliConfig c;
  c.output_dir = resolve(base_dir, read_string(doc, "config", "output_dir", "out"));
  if (doc.contains("synth")) parse_synth(doc.at("synth"), c.synth);
  if (doc.contains("train")) parse_train(doc.at("train"), c);
  if (doc.contains("experiment")) parse_experiment(doc.at("experiment"), c, base_dir);
  try {
    for (const auto& m : resolved_methods(c)) m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("experiment: ") + e.what());
  }
  return c;
}

CliConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

std::vector<ExperimentConfig> resolved_methods(const CliConfig& config) {
  if (config.methods.empty()) return default_methods(config.experiment);
  std::vector<ExperimentConfig> out;
  for (const auto& m : config.methods) {
    ExperimentConfig c = config.experiment;
    c.name = m.name;
    c.model = m.model;
    c.uq = m.uq;
    out.push_back(c);
  }
  return out;
}

}  // namespace cci::cli
