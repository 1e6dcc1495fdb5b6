#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "cli/config.hpp"

namespace cci::cli {

// Flags accepted by every subcommand; set values override the config file.
struct GlobalOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<double> alpha;
  std::optional<std::size_t> runs;
  std::optional<std::string> quantile_rule;
};

// Loads the config (or defaults when none is given) and applies overrides.
// --seed replaces the synthetic seed, the experiment base seed and the train seed.
CliConfig resolve_config(const GlobalOptions& options);

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeError = 1;
inline constexpr int kUsageError = 2;

// features.csv, labels.csv and logs/<participant>.csv under the output dir.
void cmd_generate(const CliConfig& config, std::ostream& out);

// Extracts all 17 features from every *.csv log in logs_dir (participant id =
// file stem). Labels, when given, attach day labels and define health events.
void cmd_features(const std::filesystem::path& logs_dir, const std::optional<std::filesystem::path>& labels,
                  const std::filesystem::path& output, std::ostream& out);

struct StageOptions {
  std::optional<std::filesystem::path> features;
  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> calibration;
  std::optional<std::filesystem::path> output;
  std::optional<std::string> model_kind;
  std::optional<std::string> uq;
  bool all_rows = false;
};

// The staged commands reuse the split of run 0 (seed = base_seed): train fits
// on its train rows, calibrate scores its calibration rows and predict
// scores its test rows (or every row with all_rows).
void cmd_train(const CliConfig& config, const StageOptions& stage, std::ostream& out);
void cmd_calibrate(const CliConfig& config, const StageOptions& stage, std::ostream& out);
void cmd_predict(const CliConfig& config, const StageOptions& stage, std::ostream& out);

void cmd_run(const CliConfig& config, std::ostream& out);

void cmd_plot(const std::filesystem::path& predictions, const std::filesystem::path& out_dir, std::ostream& out);

// Full CLI entry point; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace cci::cli
