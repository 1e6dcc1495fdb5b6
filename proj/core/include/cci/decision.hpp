#pragma once

// Three-way decisions from probability intervals, and abstention-aware metrics.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cci/conformal.hpp"

namespace cci {

enum class Outcome { kUti, kNoUti, kAbstain };
enum class DecisionRule { kLowerBound, kUpperBound, kRightTail, kLeftTail, kAbstain };

std::string_view to_string(Outcome outcome);
std::optional<Outcome> parse_outcome(std::string_view text);
std::string_view to_string(DecisionRule rule);

struct TailMass {
  double left = 0.5;
  double right = 0.5;
};

// Share of the interval on each side of 0.5, treating the interval as a
// uniform distribution. A zero-width interval puts all mass on its side.
TailMass tail_mass(const ProbInterval& interval);

struct IntervalDecision {
  ProbInterval interval;
  Outcome outcome = Outcome::kAbstain;
  double p_left = 0.5;
  double p_right = 0.5;
  DecisionRule rule_fired = DecisionRule::kAbstain;
};

// UTI when lo >= 0.5 or p_right >= 1 - alpha; NO_UTI when hi < 0.5 or
// p_left >= 1 - alpha; ABSTAIN otherwise. Bound checks run before tail checks.
IntervalDecision decide(const ProbInterval& interval, double alpha);

// Threshold decision for methods without an interval.
Outcome decide_point(double p);

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
};

struct EvalReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool metrics_undefined = false;  // no non-abstained predictions
  double abstention_proportion = 0.0;
  std::optional<double> width_all;      // mean width over every interval
  std::optional<double> width_decided;  // mean width over non-abstained intervals
  std::optional<double> coverage;
  ConfusionMatrix confusion;
  std::size_t n_total = 0;
  std::size_t n_decided = 0;
};

// Metrics over the non-abstained subset with UTI as the positive class.
// `intervals` may be empty for point predictors; otherwise it is aligned with
// `outcomes`.
EvalReport evaluate(std::span<const Outcome> outcomes, std::span<const int> true_labels,
                    std::span<const ProbInterval> intervals = {}, std::optional<double> coverage = std::nullopt);

}  // namespace cci
