#include "cci/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cci/matrix.hpp"
#include "json.hpp"

namespace cci {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_prob(double p, const char* who) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string(who) + ": probability " + std::to_string(p) + " outside [0, 1]");
  }
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

struct Range {
  double lo;
  double hi;
  bool empty() const { return lo > hi; }
};

// {p in [lo_bound, hi_bound] : p^2 + b p + c <= 0}
Range quadratic_sublevel(double b, double c, double lo_bound, double hi_bound) {
  const double disc = b * b - 4.0 * c;
  if (disc < 0.0) return {1.0, 0.0};
  const double root = std::sqrt(disc);
  return {std::max(lo_bound, 0.5 * (-b - root)), std::min(hi_bound, 0.5 * (-b + root))};
}

}  // namespace

LabelCenter LabelCenter::from_label(int y) {
  if (y != 0 && y != 1) throw std::invalid_argument("label must be 0 or 1");
  return y == 1 ? positive() : negative();
}

std::string_view to_string(QuantileRule rule) {
  return rule == QuantileRule::kPaperEq4 ? "paper_eq4" : "split_conformal";
}

std::optional<QuantileRule> parse_quantile_rule(std::string_view text) {
  if (text == "paper_eq4") return QuantileRule::kPaperEq4;
  if (text == "split_conformal") return QuantileRule::kSplitConformal;
  return std::nullopt;
}

double sigma(double p) {
  check_prob(p, "sigma");
  return 1.0 + (1.0 - std::abs(p - 0.5));
}

double nonconformity_score(double p, LabelCenter center) {
  const double d = center.value() - p;
  return d * d / sigma(p);
}

std::size_t quantile_rank(std::size_t n, double alpha, QuantileRule rule) {
  check_alpha(alpha);
  const double m = rule == QuantileRule::kPaperEq4 ? static_cast<double>(n) : static_cast<double>(n + 1);
  const double target = m * (1.0 - alpha);
  // Guard against products like 20 * 0.95 landing a hair above an integer.
  const double k = std::ceil(target - 1e-9 * std::max(1.0, target));
  return static_cast<std::size_t>(std::max(1.0, k));
}

CalibrationResult calibrate_scores(std::vector<double> scores, double alpha, QuantileRule rule) {
  check_alpha(alpha);
  if (scores.empty()) throw std::invalid_argument("calibrate: empty calibration set");
  std::sort(scores.begin(), scores.end());
  CalibrationResult result;
  result.alpha = alpha;
  result.rule = rule;
  result.n_cal = scores.size();
  const std::size_t k = quantile_rank(scores.size(), alpha, rule);
  result.q_hat = k <= scores.size() ? scores[k - 1] : kInf;
  result.scores = std::move(scores);
  return result;
}

CalibrationResult calibrate(std::span<const double> probs, std::span<const int> labels, double alpha,
                            QuantileRule rule) {
  if (probs.size() != labels.size()) throw std::invalid_argument("calibrate: probs/labels length mismatch");
  std::vector<double> scores;
  scores.reserve(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    check_prob(probs[i], "calibrate");
    scores.push_back(nonconformity_score(probs[i], LabelCenter::from_label(labels[i])));
  }
  return calibrate_scores(std::move(scores), alpha, rule);
}

LabelCenter center_for(double p_hat) {
  check_prob(p_hat, "center_for");
  return p_hat < 0.5 ? LabelCenter::negative() : LabelCenter::positive();
}

ProbInterval cci_interval_for_center(LabelCenter center, double q_hat) {
  if (std::isnan(q_hat) || q_hat < 0.0) throw std::invalid_argument("q_hat must be >= 0");
  if (std::isinf(q_hat)) return {0.0, 1.0};
  const double c = center.value();
  if (q_hat == 0.0) return {c, c};

  // p < 0.5: sigma = 1.5 + p  ->  p^2 - (2c + q) p + c^2 - 1.5 q <= 0
  const Range left = quadratic_sublevel(-(2.0 * c + q_hat), c * c - 1.5 * q_hat, 0.0, 0.5);
  // p >= 0.5: sigma = 2.5 - p  ->  p^2 - (2c - q) p + c^2 - 2.5 q <= 0
  const Range right = quadratic_sublevel(-(2.0 * c - q_hat), c * c - 2.5 * q_hat, 0.5, 1.0);

  ProbInterval out{1.0, 0.0};
  for (const Range& r : {left, right}) {
    if (r.empty()) continue;
    out.lo = std::min(out.lo, r.lo);
    out.hi = std::max(out.hi, r.hi);
  }
  // The center always scores 0, so the set is never empty.
  out.lo = std::min(out.lo, c);
  out.hi = std::max(out.hi, c);
  return out;
}

CciInterval cci_interval(double p_hat, const CalibrationResult& calib) {
  const LabelCenter center = center_for(p_hat);
  return CciInterval{cci_interval_for_center(center, calib.q_hat), center};
}

ProbInterval naive_interval(std::span<const double> tree_probs) {
  if (tree_probs.empty()) throw std::invalid_argument("naive_interval: no tree probabilities");
  const double m = mean(tree_probs);
  const double sd = population_std(tree_probs);
  return {std::max(0.0, m - sd), std::min(1.0, m + sd)};
}

double empirical_coverage(std::span<const double> test_probs, std::span<const int> test_labels,
                          const CalibrationResult& calib) {
  if (test_probs.empty()) throw std::invalid_argument("empirical_coverage: empty test set");
  if (test_probs.size() != test_labels.size()) throw std::invalid_argument("empirical_coverage: length mismatch");
  std::size_t covered = 0;
  for (std::size_t i = 0; i < test_probs.size(); ++i) {
    if (nonconformity_score(test_probs[i], LabelCenter::from_label(test_labels[i])) <= calib.q_hat) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(test_probs.size());
}

double center_coverage(std::span<const double> test_probs, std::span<const int> test_labels,
                       const CalibrationResult& calib) {
  if (test_probs.empty()) throw std::invalid_argument("center_coverage: empty test set");
  if (test_probs.size() != test_labels.size()) throw std::invalid_argument("center_coverage: length mismatch");
  std::size_t covered = 0;
  for (std::size_t i = 0; i < test_probs.size(); ++i) {
    const auto ci = cci_interval(test_probs[i], calib);
    if (ci.interval.contains(LabelCenter::from_label(test_labels[i]).value())) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(test_probs.size());
}

std::string CalibrationResult::to_json() const {
  nlohmann::json j;
  j["alpha"] = alpha;
  if (std::isinf(q_hat)) {
    j["q_hat"] = "inf";
  } else {
    j["q_hat"] = q_hat;
  }
  j["rule"] = std::string(cci::to_string(rule));
  j["n_cal"] = n_cal;
  j["scores"] = scores;
  return j.dump(1);
}

CalibrationResult CalibrationResult::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    CalibrationResult r;
    r.alpha = j.at("alpha").get<double>();
    const auto& q = j.at("q_hat");
    r.q_hat = q.is_string() && q.get<std::string>() == "inf" ? kInf : q.get<double>();
    const auto rule = parse_quantile_rule(j.at("rule").get<std::string>());
    if (!rule) throw std::invalid_argument("calibration JSON: unknown rule");
    r.rule = *rule;
    r.n_cal = j.at("n_cal").get<std::size_t>();
    r.scores = j.at("scores").get<std::vector<double>>();
    if (r.scores.size() != r.n_cal) throw std::invalid_argument("calibration JSON: n_cal != score count");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("calibration JSON: ") + e.what());
  }
}

}  // namespace cci
