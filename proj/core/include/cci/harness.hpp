#pragma once

// Experimental protocol: stratified train/calibration/test splits, repeated
// seeded runs, paired method comparison and report files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cci/conformal.hpp"
#include "cci/decision.hpp"
#include "cci/features.hpp"
#include "cci/models.hpp"
#include "cci/svg_plot.hpp"

namespace cci {

enum class UqMethod { kNone, kNaive, kCci };
enum class SplitMode { kStratified, kByParticipant };

std::string_view to_string(UqMethod method);
std::optional<UqMethod> parse_uq_method(std::string_view text);
std::string_view to_string(SplitMode mode);
std::optional<SplitMode> parse_split_mode(std::string_view text);

struct ExperimentConfig {
  std::string name = "cci";
  ModelKind model = ModelKind::kLogistic;
  UqMethod uq = UqMethod::kCci;
  TrainConfig train;
  bool grid_search = false;
  double alpha = 0.1;
  double test_fraction = 0.10;
  double calib_fraction_of_remainder = 0.40;
  std::size_t n_runs = 20;
  std::uint64_t base_seed = 0;
  SelectionMode feature_mode = SelectionMode::kTop5Paper;
  std::size_t top_k = 5;
  QuantileRule quantile_rule = QuantileRule::kSplitConformal;
  SplitMode split_mode = SplitMode::kStratified;

  // Throws std::invalid_argument. Naive intervals need a forest.
  void validate() const;
};

// The four rows of the comparison table: random guess, the logistic base
// model, naive forest intervals and CCI on the logistic model.
std::vector<ExperimentConfig> default_methods(const ExperimentConfig& shared);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t calibration = 0;
  std::size_t test = 0;
};
// Half-up rounding of both fractions.
SplitSizes split_sizes(std::size_t n, double test_fraction, double calib_fraction_of_remainder);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> calibration;
  std::vector<std::size_t> test;
};

// Requires >= 10 labeled rows; throws std::invalid_argument when a split
// would be empty. Index lists are sorted ascending.
SplitIndices split(std::span<const FeatureVector> dataset, const ExperimentConfig& config, std::uint64_t run_seed);

struct RunRecord {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  SplitSizes sizes;
  EvalReport report;
  std::optional<double> q_hat;
  std::optional<double> center_coverage;
  std::vector<std::string> features;
  std::vector<PredictionRow> predictions;
};

struct MeanStdStat {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;  // runs contributing
};

struct AggregateReport {
  MeanStdStat accuracy, precision, recall, f1, abstention;
  std::optional<MeanStdStat> width_all, width_decided, coverage, center_coverage, q_hat;
  std::size_t undefined_runs = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RunRecord> runs;
  AggregateReport aggregate;
};

// Mean and population std over runs, in run order; optional metrics over the
// runs that report them (an infinite q_hat is left out of its mean).
AggregateReport aggregate_runs(std::span<const RunRecord> runs);

// Feature columns for one run; permutation ranking fits on an inner split
// of the training rows and scores on its 25% holdout.
std::vector<Feature> choose_features(std::span<const FeatureVector> train_rows, const ExperimentConfig& config,
                                     const TrainConfig& train, std::uint64_t seed);

RunRecord run_once(std::span<const FeatureVector> dataset, const ExperimentConfig& config, std::size_t run);
// Failed runs rethrow as std::runtime_error naming the run seed.
ExperimentResult run_experiment(std::span<const FeatureVector> dataset, const ExperimentConfig& config);

// Every config must share the split protocol (seed, runs, fractions, split
// mode) so each run index sees identical partitions.
std::vector<ExperimentResult> compare_methods(std::span<const FeatureVector> dataset,
                                              std::span<const ExperimentConfig> configs);

std::string report_json(std::span<const ExperimentResult> results, std::span<const FeatureVector> dataset);
std::string report_csv(std::span<const ExperimentResult> results);
std::string table1_text(std::span<const ExperimentResult> results);

// report.json, report.csv, table1.txt and predictions/<name>_runNN.csv for
// every interval method.
void write_reports(const std::filesystem::path& out_dir, std::span<const ExperimentResult> results,
                   std::span<const FeatureVector> dataset);

}  // namespace cci
