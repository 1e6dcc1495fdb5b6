#pragma once

// JSON configuration shared by every subcommand.
//
//   {
//     "output_dir": "out",
//     "synth":      { "seed": 42, "participant_days": [...], "effect_sizes": {"f03": 0.8}, ... },
//     "train":      { "model": "logistic", "logistic": {"C": 0.1}, "forest": {"n_trees": 100}, ... },
//     "experiment": { "alpha": 0.1, "n_runs": 20, "methods": [{"name": "cci", "model": "logistic", "uq": "cci"}] }
//   }
//
// Unknown keys are rejected at every level. Relative paths resolve against
// the directory holding the config file.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cci/harness.hpp"
#include "cci/models.hpp"
#include "cci/synth.hpp"

namespace cci::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CliConfig {
  std::filesystem::path output_dir = "out";
  SynthConfig synth = default_synth_config();
  ModelKind model = ModelKind::kLogistic;
  ExperimentConfig experiment;  // shared protocol plus train settings
  std::optional<std::filesystem::path> dataset;
  std::vector<ExperimentConfig> methods;  // empty means the default four
};

// Throws ConfigError with the offending key path.
CliConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);
CliConfig load_config(const std::filesystem::path& path);

// Methods to run, each inheriting the shared experiment and train settings.
std::vector<ExperimentConfig> resolved_methods(const CliConfig& config);

}  // namespace cci::cli
