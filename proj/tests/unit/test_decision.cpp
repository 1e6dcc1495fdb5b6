#include <gtest/gtest.h>

#include <algorithm>

#include "cci/decision.hpp"
#include "cci/rng.hpp"

namespace {

using namespace cci;

TEST(TailMass, UniformShareEachSide) {
  auto m = tail_mass({0.3, 0.8});
  EXPECT_NEAR(m.right, 0.6, 1e-12);
  EXPECT_NEAR(m.left, 0.4, 1e-12);
  auto full = tail_mass({0.0, 1.0});
  EXPECT_DOUBLE_EQ(full.right, 0.5);
  EXPECT_DOUBLE_EQ(full.left, 0.5);
  EXPECT_EQ(tail_mass({0.5, 0.5}).right, 1.0);
  EXPECT_EQ(tail_mass({0.49, 0.49}).right, 0.0);
  EXPECT_EQ(tail_mass({0.6, 0.9}).right, 1.0);
}

TEST(Decide, HandExamples) {
  auto a = decide({0.6, 0.9}, 0.1);
  EXPECT_EQ(a.outcome, Outcome::kUti);
  EXPECT_EQ(a.rule_fired, DecisionRule::kLowerBound);
  auto b = decide({0.1, 0.4}, 0.1);
  EXPECT_EQ(b.outcome, Outcome::kNoUti);
  EXPECT_EQ(b.rule_fired, DecisionRule::kUpperBound);
  auto c = decide({0.3, 0.8}, 0.1);
  EXPECT_EQ(c.outcome, Outcome::kAbstain);
  EXPECT_EQ(c.rule_fired, DecisionRule::kAbstain);
  EXPECT_NEAR(c.p_right, 0.6, 1e-12);
}

TEST(Decide, TailRules) {
  // p_right = 0.46 / 0.5 = 0.92
  auto r = decide({0.46, 0.96}, 0.1);
  EXPECT_EQ(r.outcome, Outcome::kUti);
  EXPECT_EQ(r.rule_fired, DecisionRule::kRightTail);
  auto l = decide({0.04, 0.54}, 0.1);
  EXPECT_EQ(l.outcome, Outcome::kNoUti);
  EXPECT_EQ(l.rule_fired, DecisionRule::kLeftTail);
}

TEST(Decide, FullIntervalAbstainsBelowOneHalf) {
  for (double alpha : {0.01, 0.1, 0.3, 0.49}) EXPECT_EQ(decide({0.0, 1.0}, alpha).outcome, Outcome::kAbstain);
}

TEST(Decide, BoundaryAtOneHalf) {
  EXPECT_EQ(decide({0.5, 0.7}, 0.1).outcome, Outcome::kUti);
  // hi = 0.5 misses the upper-bound rule but leaves no mass above 0.5
  auto d = decide({0.2, 0.5}, 0.1);
  EXPECT_EQ(d.outcome, Outcome::kNoUti);
  EXPECT_EQ(d.rule_fired, DecisionRule::kLeftTail);
}

// Predicate restated from the rule text.
Outcome expected_outcome(double lo, double hi, double alpha) {
  const double pr = hi > lo ? std::clamp((hi - 0.5) / (hi - lo), 0.0, 1.0) : (lo >= 0.5 ? 1.0 : 0.0);
  const double pl = 1.0 - pr;
  if (lo >= 0.5) return Outcome::kUti;
  if (hi < 0.5) return Outcome::kNoUti;
  if (pr >= 1.0 - alpha) return Outcome::kUti;
  if (pl >= 1.0 - alpha) return Outcome::kNoUti;
  return Outcome::kAbstain;
}

TEST(Decide, TotalAndConsistentOnRandomIntervals) {
  Rng rng(31);
  for (int i = 0; i < 10000; ++i) {
    double a = rng.uniform(), b = rng.uniform();
    if (i % 10 == 0) b = a;
    if (i % 17 == 0) a = 0.5;
    const ProbInterval iv{std::min(a, b), std::max(a, b)};
    const double alpha = rng.uniform(0.01, 0.99);
    auto d = decide(iv, alpha);
    EXPECT_EQ(d.outcome, expected_outcome(iv.lo, iv.hi, alpha));
    switch (d.rule_fired) {
      case DecisionRule::kLowerBound:
        EXPECT_GE(iv.lo, 0.5);
        EXPECT_EQ(d.outcome, Outcome::kUti);
        break;
      case DecisionRule::kUpperBound:
        EXPECT_LT(iv.hi, 0.5);
        EXPECT_LT(iv.lo, 0.5);
        EXPECT_EQ(d.outcome, Outcome::kNoUti);
        break;
      case DecisionRule::kRightTail:
        EXPECT_GE(d.p_right, 1.0 - alpha);
        EXPECT_EQ(d.outcome, Outcome::kUti);
        break;
      case DecisionRule::kLeftTail:
        EXPECT_GE(d.p_left, 1.0 - alpha);
        EXPECT_EQ(d.outcome, Outcome::kNoUti);
        break;
      case DecisionRule::kAbstain:
        EXPECT_LT(d.p_right, 1.0 - alpha);
        EXPECT_LT(d.p_left, 1.0 - alpha);
        EXPECT_EQ(d.outcome, Outcome::kAbstain);
        break;
    }
    EXPECT_NEAR(d.p_left + d.p_right, 1.0, 1e-12);
  }
}

// Widening never turns an abstention into a decision under the bound rules;
// alpha >= 0.5 would let the tail rules fire on wide intervals, so keep it small.
TEST(Decide, WideningKeepsAbstentions) {
  Rng rng(32);
  for (int i = 0; i < 5000; ++i) {
    double a = rng.uniform(), b = rng.uniform();
    ProbInterval iv{std::min(a, b), std::max(a, b)};
    const double alpha = rng.uniform(0.01, 0.2);
    if (decide(iv, alpha).outcome != Outcome::kAbstain) continue;
    // abstention implies lo < 0.5 <= hi; widen symmetrically so tail balance stays put
    const double grow = rng.uniform(0.0, 0.5);
    ProbInterval wide{std::max(0.0, iv.lo - grow), std::min(1.0, iv.hi + grow)};
    auto d = decide(wide, alpha);
    EXPECT_NE(d.rule_fired, DecisionRule::kLowerBound);
    EXPECT_NE(d.rule_fired, DecisionRule::kUpperBound);
  }
}

TEST(DecidePoint, Threshold) {
  EXPECT_EQ(decide_point(0.5), Outcome::kUti);
  EXPECT_EQ(decide_point(0.49), Outcome::kNoUti);
}

TEST(Outcome, Names) {
  for (auto o : {Outcome::kUti, Outcome::kNoUti, Outcome::kAbstain}) EXPECT_EQ(parse_outcome(to_string(o)), o);
  EXPECT_FALSE(parse_outcome("MAYBE"));
}

TEST(Evaluate, AbstentionProportion) {
  std::vector<Outcome> o(10, Outcome::kUti);
  o[0] = o[1] = o[2] = Outcome::kAbstain;
  std::vector<int> y(10, 1);
  auto r = evaluate(o, y);
  EXPECT_DOUBLE_EQ(r.abstention_proportion, 0.3);
  EXPECT_EQ(r.n_decided, 7u);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
  EXPECT_DOUBLE_EQ(r.f1, 1.0);
}

TEST(Evaluate, ConfusionArithmetic) {
  std::vector<Outcome> o;
  std::vector<int> y;
  auto add = [&](Outcome out, int label, int times) {
    for (int i = 0; i < times; ++i) {
      o.push_back(out);
      y.push_back(label);
    }
  };
  add(Outcome::kUti, 1, 3);
  add(Outcome::kUti, 0, 1);
  add(Outcome::kNoUti, 1, 1);
  add(Outcome::kNoUti, 0, 5);
  auto r = evaluate(o, y);
  EXPECT_EQ(r.confusion.tp, 3u);
  EXPECT_EQ(r.confusion.fp, 1u);
  EXPECT_EQ(r.confusion.fn, 1u);
  EXPECT_EQ(r.confusion.tn, 5u);
  EXPECT_DOUBLE_EQ(r.precision, 0.75);
  EXPECT_DOUBLE_EQ(r.recall, 0.75);
  EXPECT_DOUBLE_EQ(r.f1, 0.75);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.8);
}

TEST(Evaluate, AllAbstainedIsFlaggedUndefined) {
  std::vector<Outcome> o(4, Outcome::kAbstain);
  std::vector<int> y = {1, 0, 1, 0};
  std::vector<ProbInterval> iv(4, ProbInterval{0.2, 0.8});
  auto r = evaluate(o, y, iv, 0.9);
  EXPECT_TRUE(r.metrics_undefined);
  EXPECT_EQ(r.accuracy, 0.0);
  EXPECT_EQ(r.abstention_proportion, 1.0);
  ASSERT_TRUE(r.width_all.has_value());
  EXPECT_NEAR(*r.width_all, 0.6, 1e-12);
  EXPECT_FALSE(r.width_decided.has_value());
  EXPECT_EQ(r.coverage, 0.9);
}

TEST(Evaluate, WidthsOverAllAndDecided) {
  std::vector<Outcome> o = {Outcome::kUti, Outcome::kAbstain};
  std::vector<int> y = {1, 0};
  std::vector<ProbInterval> iv = {{0.6, 0.8}, {0.2, 0.8}};
  auto r = evaluate(o, y, iv);
  EXPECT_NEAR(*r.width_all, 0.4, 1e-12);
  EXPECT_NEAR(*r.width_decided, 0.2, 1e-12);
}

TEST(Evaluate, F1IsHarmonicMean) {
  Rng rng(33);
  for (int t = 0; t < 200; ++t) {
    std::vector<Outcome> o;
    std::vector<int> y;
    for (int i = 0; i < 30; ++i) {
      const double u = rng.uniform();
      o.push_back(u < 0.4 ? Outcome::kUti : u < 0.8 ? Outcome::kNoUti : Outcome::kAbstain);
      y.push_back(rng.bernoulli(0.5) ? 1 : 0);
    }
    auto r = evaluate(o, y);
    if (r.precision > 0 && r.recall > 0) {
      EXPECT_NEAR(r.f1, 2 * r.precision * r.recall / (r.precision + r.recall), 1e-12);
    }
    EXPECT_EQ(r.confusion.total(), r.n_decided);
  }
}

}  // namespace
