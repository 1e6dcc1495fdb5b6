#include "cci/decision.hpp"

#include <algorithm>
#include <stdexcept>

namespace cci {

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kUti:
      return "UTI";
    case Outcome::kNoUti:
      return "NO_UTI";
    case Outcome::kAbstain:
      return "ABSTAIN";
  }
  return "ABSTAIN";
}

std::optional<Outcome> parse_outcome(std::string_view text) {
  for (auto o : {Outcome::kUti, Outcome::kNoUti, Outcome::kAbstain}) {
    if (to_string(o) == text) return o;
  }
  return std::nullopt;
}

std::string_view to_string(DecisionRule rule) {
  switch (rule) {
    case DecisionRule::kLowerBound:
      return "lower_bound";
    case DecisionRule::kUpperBound:
      return "upper_bound";
    case DecisionRule::kRightTail:
      return "right_tail";
    case DecisionRule::kLeftTail:
      return "left_tail";
    case DecisionRule::kAbstain:
      return "abstain";
  }
  return "abstain";
}

TailMass tail_mass(const ProbInterval& interval) {
  const double width = interval.width();
  if (width <= 0.0) {
    const double right = interval.lo >= 0.5 ? 1.0 : 0.0;
    return {1.0 - right, right};
  }
  const double right = std::clamp((interval.hi - 0.5) / width, 0.0, 1.0);
  return {1.0 - right, right};
}

IntervalDecision decide(const ProbInterval& interval, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("decide: alpha must lie in (0, 1)");
  if (!(interval.lo <= interval.hi)) throw std::invalid_argument("decide: interval has lo > hi");

  IntervalDecision d;
  d.interval = interval;
  const auto mass = tail_mass(interval);
  d.p_left = mass.left;
  d.p_right = mass.right;
  const double confidence = 1.0 - alpha;

  if (interval.lo >= 0.5) {
    d.outcome = Outcome::kUti;
    d.rule_fired = DecisionRule::kLowerBound;
  } else if (interval.hi < 0.5) {
    d.outcome = Outcome::kNoUti;
    d.rule_fired = DecisionRule::kUpperBound;
  } else if (d.p_right >= confidence) {
    d.outcome = Outcome::kUti;
    d.rule_fired = DecisionRule::kRightTail;
  } else if (d.p_left >= confidence) {
    d.outcome = Outcome::kNoUti;
    d.rule_fired = DecisionRule::kLeftTail;
  } else {
    d.outcome = Outcome::kAbstain;
    d.rule_fired = DecisionRule::kAbstain;
  }
  return d;
}

Outcome decide_point(double p) { return p >= 0.5 ? Outcome::kUti : Outcome::kNoUti; }

EvalReport evaluate(std::span<const Outcome> outcomes, std::span<const int> true_labels,
                    std::span<const ProbInterval> intervals, std::optional<double> coverage) {
  if (outcomes.size() != true_labels.size()) throw std::invalid_argument("evaluate: outcomes/labels mismatch");
  if (!intervals.empty() && intervals.size() != outcomes.size()) {
    throw std::invalid_argument("evaluate: intervals/outcomes mismatch");
  }

  EvalReport r;
  r.n_total = outcomes.size();
  r.coverage = coverage;
  std::size_t abstained = 0;
  double width_sum = 0.0;
  double decided_width_sum = 0.0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const double w = intervals.empty() ? 0.0 : intervals[i].width();
    width_sum += w;
    if (outcomes[i] == Outcome::kAbstain) {
      ++abstained;
      continue;
    }
    decided_width_sum += w;
    const bool predicted_positive = outcomes[i] == Outcome::kUti;
    const bool positive = true_labels[i] == 1;
    if (predicted_positive && positive) ++r.confusion.tp;
    if (predicted_positive && !positive) ++r.confusion.fp;
    if (!predicted_positive && positive) ++r.confusion.fn;
    if (!predicted_positive && !positive) ++r.confusion.tn;
  }
  r.n_decided = r.n_total - abstained;
  r.abstention_proportion = r.n_total > 0 ? static_cast<double>(abstained) / static_cast<double>(r.n_total) : 0.0;

  if (!intervals.empty() && r.n_total > 0) {
    r.width_all = width_sum / static_cast<double>(r.n_total);
    if (r.n_decided > 0) r.width_decided = decided_width_sum / static_cast<double>(r.n_decided);
  }

  const auto& c = r.confusion;
  if (r.n_decided == 0) {
    r.metrics_undefined = true;
    return r;
  }
  r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(r.n_decided);
  r.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  r.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

}  // namespace cci
