#pragma once

// Probability intervals for binary classifiers.
//
// Conformal-calibrated intervals map labels to centers y' = 0.25 + 0.5 y,
// score calibration points with S(p, y') = (y' - p)^2 / sigma(p) where
// sigma(p) = 1 + (1 - |p - 0.5|), and return every p in [0, 1] whose score
// against the predicted center stays within the calibrated quantile q_hat.
//
// The naive interval is mean +- population std of per-tree probabilities.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cci {

// Transformed label: 0.25 for the negative class, 0.75 for the positive class.
class LabelCenter {
 public:
  static LabelCenter from_label(int y);
  static constexpr LabelCenter negative() { return LabelCenter(0.25); }
  static constexpr LabelCenter positive() { return LabelCenter(0.75); }

  double value() const { return value_; }
  bool is_positive() const { return value_ > 0.5; }

  friend bool operator==(LabelCenter, LabelCenter) = default;

 private:
  constexpr explicit LabelCenter(double v) : value_(v) {}
  double value_;
};

enum class QuantileRule {
  kPaperEq4,        // ceil(n (1 - alpha))-th smallest score
  kSplitConformal,  // ceil((n + 1)(1 - alpha))-th smallest, +inf past n
};

std::string_view to_string(QuantileRule rule);
std::optional<QuantileRule> parse_quantile_rule(std::string_view text);

struct CalibrationResult {
  double q_hat = 0.0;  // may be +inf
  double alpha = 0.1;
  std::size_t n_cal = 0;
  std::vector<double> scores;  // sorted ascending
  QuantileRule rule = QuantileRule::kSplitConformal;

  std::string to_json() const;
  static CalibrationResult from_json(std::string_view text);
};

struct ProbInterval {
  double lo = 0.0;
  double hi = 1.0;

  double width() const { return hi - lo; }
  bool contains(double p) const { return p >= lo && p <= hi; }

  friend bool operator==(const ProbInterval&, const ProbInterval&) = default;
};

struct CciInterval {
  ProbInterval interval;
  LabelCenter center = LabelCenter::positive();
};

// Throws std::invalid_argument for p outside [0, 1].
double sigma(double p);
double nonconformity_score(double p, LabelCenter center);

// Rank used by each rule for n calibration scores; may exceed n.
std::size_t quantile_rank(std::size_t n, double alpha, QuantileRule rule);

// Throws std::invalid_argument on empty input, mismatched lengths, labels
// outside {0, 1}, probabilities outside [0, 1] or alpha outside (0, 1).
CalibrationResult calibrate(std::span<const double> probs, std::span<const int> labels, double alpha,
                            QuantileRule rule = QuantileRule::kSplitConformal);
// Same rank logic applied to precomputed scores.
CalibrationResult calibrate_scores(std::vector<double> scores, double alpha, QuantileRule rule);

// Closest class center; p_hat = 0.5 maps to the positive center.
LabelCenter center_for(double p_hat);

// Sublevel set {p in [0,1] : S(p, center) <= q_hat}, solved per linear piece
// of sigma. The set is an interval: (center - p)^2 - q_hat sigma(p) is convex
// because -sigma(p) = |p - 0.5| - 2 is convex.
ProbInterval cci_interval_for_center(LabelCenter center, double q_hat);
CciInterval cci_interval(double p_hat, const CalibrationResult& calib);

// Throws std::invalid_argument on empty input.
ProbInterval naive_interval(std::span<const double> tree_probs);

// Fraction of test points with S(p_hat_i, y'_i) <= q_hat, i.e. whose
// predicted probability lies in the interval built around the true label's
// center. This is the event bounded below by 1 - alpha under exchangeability.
double empirical_coverage(std::span<const double> test_probs, std::span<const int> test_labels,
                          const CalibrationResult& calib);

// Fraction of test points whose true center lies inside the interval built
// around the predicted center.
double center_coverage(std::span<const double> test_probs, std::span<const int> test_labels,
                       const CalibrationResult& calib);

}  // namespace cci
