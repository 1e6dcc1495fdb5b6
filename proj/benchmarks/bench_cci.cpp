#include <benchmark/benchmark.h>

#include <vector>

#include "cci/conformal.hpp"
#include "cci/features.hpp"
#include "cci/models.hpp"
#include "cci/rng.hpp"
#include "cci/synth.hpp"

namespace {

using namespace cci;

void BM_CciInterval(benchmark::State& state) {
  Rng rng(1);
  std::vector<double> p_hats(1024);
  for (auto& p : p_hats) p = rng.uniform();
  CalibrationResult calib;
  calib.q_hat = 0.05;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cci_interval(p_hats[i++ & 1023], calib));
  }
}
BENCHMARK(BM_CciInterval);

void BM_Calibrate(benchmark::State& state) {
  Rng rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> probs(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    probs[i] = rng.uniform();
    labels[i] = rng.bernoulli(0.5) ? 1 : 0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(calibrate(probs, labels, 0.1));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Calibrate)->Arg(42)->Arg(1000)->Arg(100000);

void BM_FitForest(benchmark::State& state) {
  const auto data = generate_feature_dataset(default_synth_config());
  const auto cols = select_features({.mode = SelectionMode::kTop5Paper});
  const Matrix x = project(data, cols);
  std::vector<int> y;
  for (const auto& r : data) y.push_back(*r.label);
  TrainConfig tc;
  tc.forest.n_trees = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_forest(x, y, column_names(cols), tc));
}
BENCHMARK(BM_FitForest)->Arg(10)->Arg(100);

void BM_ExtractParticipantFeatures(benchmark::State& state) {
  const auto logs = generate_event_logs(default_synth_config());
  const auto windows = window_by_day(logs.front().events, logs.front().participant_id);
  const auto health = health_events_of(logs.front());
  for (auto _ : state) benchmark::DoNotOptimize(extract_participant_features(windows, health));
}
BENCHMARK(BM_ExtractParticipantFeatures);

}  // namespace

BENCHMARK_MAIN();
