// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "cci/conformal.hpp"
#include "cci/decision.hpp"
#include "cci/features.hpp"
#include "cci/harness.hpp"
#include "cci/models.hpp"
#include "cci/rng.hpp"
#include "cci/synth.hpp"
#include "cli/commands.hpp"

namespace {

namespace fs = std::filesystem;
using namespace cci;
using Clock = std::chrono::steady_clock;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Pinned tolerances.
constexpr double kCoverageFloor = 0.88;
constexpr double kCoverageBudgetS = 60.0;
constexpr double kIntervalTol = 1e-3;
constexpr double kSymmetryTol = 1e-9;
constexpr double kLogisticGradTol = 1e-5;
constexpr double kMlpGradTol = 1e-4;
constexpr double kFeatureTol = 1e-6;
constexpr std::size_t kReplicationWins = 16;
constexpr double kReplicationBudgetS = 300.0;
constexpr double kRandomLo = 0.35, kRandomHi = 0.65, kBaseMargin = 0.10;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// 1. Marginal coverage on exchangeable synthetic data.
Verdict coverage_guarantee() {
  const auto t0 = Clock::now();
  SynthConfig sc = default_synth_config();
  sc.participant_days.clear();
  sc.n_participants = 10;
  sc.days_per_participant = 100;
  const auto data = generate_feature_dataset(sc);
  ExperimentConfig c;
  c.uq = UqMethod::kCci;
  c.quantile_rule = QuantileRule::kSplitConformal;
  c.alpha = 0.1;
  c.n_runs = 20;
  const auto result = run_experiment(data, c);
  const double cov = result.aggregate.coverage->mean;
  const std::size_t n_test = result.runs.front().sizes.test;
  const double secs = seconds_since(t0);
  return {cov >= kCoverageFloor && n_test >= 100 && secs < kCoverageBudgetS,
          "mean coverage " + fmt("%.4f", cov) + " >= 0.88 over 20 runs x " + std::to_string(n_test) +
              " test points, " + fmt("%.1f", secs) + " s < 60 s"};
}

// Exact rank oracle with alpha = a / 1000.
double oracle_q(std::vector<double> scores, int a, QuantileRule rule) {
  std::sort(scores.begin(), scores.end());
  const long long m = static_cast<long long>(scores.size()) + (rule == QuantileRule::kSplitConformal ? 1 : 0);
  for (double s : scores) {
    long long count = 0;
    for (double t : scores) count += t <= s;
    if (1000 * count >= m * (1000 - a)) return s;
  }
  return kInf;
}

// 2. Quantile oracle.
Verdict quantile_oracle() {
  Rng rng(2002);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(80);
    std::vector<double> scores(n);
    // coarse grid forces duplicates
    for (auto& s : scores) s = static_cast<double>(rng.below(20)) / 40.0;
    const int a = 1 + static_cast<int>(rng.below(999));
    for (auto rule : {QuantileRule::kPaperEq4, QuantileRule::kSplitConformal}) {
      if (calibrate_scores(scores, a / 1000.0, rule).q_hat != oracle_q(scores, a, rule)) ++mismatches;
    }
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches over 100 multisets x 2 rules (exact)"};
}

// 3. Interval oracle against a 1e-5 grid.
Verdict interval_oracle() {
  Rng rng(3003);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double center = rng.bernoulli(0.5) ? 0.75 : 0.25;
    const double q = rng.uniform(0.0, 0.5);
    double lo = 2.0, hi = -1.0;
    for (int i = 0; i <= 100000; ++i) {
      const double p = i * 1e-5;
      if ((center - p) * (center - p) <= q * (2.0 - std::abs(p - 0.5))) {
        lo = std::min(lo, p);
        hi = std::max(hi, p);
      }
    }
    const auto iv = cci_interval_for_center(LabelCenter::from_label(center > 0.5 ? 1 : 0), q);
    worst = std::max({worst, std::abs(iv.lo - lo), std::abs(iv.hi - hi)});
  }
  return {worst <= kIntervalTol, "max endpoint error " + fmt("%.2e", worst) + " <= 1e-3 over 100 pairs"};
}

// 4. Nesting across alpha and reflection of the two centers.
Verdict monotonicity_symmetry() {
  Rng rng(4004);
  int nesting_failures = 0;
  double worst_reflection = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> probs(40 + rng.below(60));
    std::vector<int> labels(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
      probs[i] = rng.uniform();
      labels[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    const double p_hat = rng.uniform();
    ProbInterval prev{0.0, 1.0};
    for (double alpha : {0.05, 0.1, 0.2}) {
      const auto iv = cci_interval(p_hat, calibrate(probs, labels, alpha)).interval;
      if (iv.lo < prev.lo || iv.hi > prev.hi) ++nesting_failures;
      prev = iv;
    }
    const double q = rng.uniform(0.0, 0.6);
    const auto pos = cci_interval_for_center(LabelCenter::positive(), q);
    const auto neg = cci_interval_for_center(LabelCenter::negative(), q);
    worst_reflection = std::max({worst_reflection, std::abs(neg.lo - (1.0 - pos.hi)), std::abs(neg.hi - (1.0 - pos.lo))});
  }
  return {nesting_failures == 0 && worst_reflection <= kSymmetryTol,
          std::to_string(nesting_failures) + " nesting violations; reflection error " +
              fmt("%.2e", worst_reflection) + " <= 1e-9"};
}

double rel_error(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}); }

// 5. Analytic gradients against central differences.
Verdict gradient_checks() {
  Rng rng(5005);
  const double h = 1e-5;
  double worst_lr = 0.0, worst_mlp = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 20 + rng.below(30), d = 1 + rng.below(6);
    Matrix x(n, d);
    std::vector<int> y(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < d; ++c) x(r, c) = rng.normal();
      y[r] = rng.bernoulli(0.5) ? 1 : 0;
    }
    LogisticParams p;
    for (std::size_t j = 0; j < d; ++j) p.weights.push_back(rng.normal());
    p.bias = rng.normal();
    const double c_reg = 0.05 + rng.uniform();
    const auto obj = logistic_objective(x, y, p, c_reg);
    for (std::size_t j = 0; j <= d; ++j) {
      auto plus = p, minus = p;
      (j < d ? plus.weights[j] : plus.bias) += h;
      (j < d ? minus.weights[j] : minus.bias) -= h;
      const double num =
          (logistic_objective(x, y, plus, c_reg).value - logistic_objective(x, y, minus, c_reg).value) / (2 * h);
      worst_lr = std::max(worst_lr, rel_error(j < d ? obj.grad_weights[j] : obj.grad_bias, num));
    }

    MlpParams m;
    m.inputs = d;
    m.hidden = 2 + rng.below(8);
    m.w1.resize(m.hidden * d);
    m.b1.resize(m.hidden);
    m.w2.resize(m.hidden);
    std::vector<double> flat(m.size());
    for (auto& v : flat) v = 0.5 * rng.normal();
    m.assign(flat);
    const double l2 = 1e-3 + rng.uniform();
    const auto mobj = mlp_objective(x, y, m, l2);
    for (std::size_t k = 0; k < flat.size(); ++k) {
      auto plus = flat, minus = flat;
      plus[k] += h;
      minus[k] -= h;
      MlpParams mp = m, mm = m;
      mp.assign(plus);
      mm.assign(minus);
      const double num = (mlp_objective(x, y, mp, l2).value - mlp_objective(x, y, mm, l2).value) / (2 * h);
      worst_mlp = std::max(worst_mlp, rel_error(mobj.grad[k], num));
    }
  }
  return {worst_lr <= kLogisticGradTol && worst_mlp <= kMlpGradTol,
          "logistic " + fmt("%.2e", worst_lr) + " <= 1e-5, mlp " + fmt("%.2e", worst_mlp) + " <= 1e-4"};
}

// 6. Hand-traced golden fixture plus the worked examples.
Verdict golden_features() {
  const fs::path golden = fs::path(CCI_TEST_DATA_DIR) / "golden";
  const auto log = parse_event_log(golden / "logs" / "H01.csv");
  const auto windows = window_by_day(log.events, "H01");
  HealthEvents health;
  std::ifstream labels(golden / "labels.csv");
  std::string line;
  std::getline(labels, line);
  while (std::getline(labels, line)) {
    if (line.ends_with(",1")) health.insert(std::chrono::sys_days(*parse_date(line.substr(4, 10))));
  }
  const auto got = extract_participant_features(windows, health);
  const auto expected = read_feature_csv(golden / "expected_features.csv");
  int mismatches = got.size() == expected.size() ? 0 : 1;
  for (std::size_t r = 0; r < std::min(got.size(), expected.size()); ++r) {
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      const bool count = is_count_feature(static_cast<Feature>(i));
      const double diff = std::abs(got[r].values[i] - expected[r].values[i]);
      if (count ? diff != 0.0 : diff > kFeatureTol) ++mismatches;
    }
  }
  // worked examples
  DayWindow two;
  two.date = *parse_date("2024-03-01");
  for (const char* t : {"00:00:00", "00:02:00", "00:10:00"}) {
    two.events.push_back(*parse_event_line(std::string("2024-03-01T") + t + ",B1,motion,bathroom,ON"));
  }
  const auto s = visit_count_and_avg_duration(segment_visits(two));
  DayWindow ent;
  ent.date = two.date;
  for (const char* id : {"A", "A", "A", "B"}) {
    ent.events.push_back(*parse_event_line(std::string("2024-03-01T12:00:00,") + id + ",motion,kitchen,ON"));
  }
  const double h = movement_entropy(ent);
  const bool examples = s.count == 2 && s.avg_duration_min == 1.0 && std::abs(h - 0.8113) <= 1e-4;
  return {mismatches == 0 && examples && log.skipped == 1,
          std::to_string(mismatches) + " mismatching values over " + std::to_string(got.size()) +
              " fixture days; f01=" + std::to_string(s.count) + " f02=" + fmt("%.3f", s.avg_duration_min) +
              " entropy[3,1]=" + fmt("%.4f", h)};
}

struct Replication {
  std::vector<ExperimentResult> results;
  double seconds = 0.0;
};

Replication replicate_table() {
  const auto t0 = Clock::now();
  const auto data = generate_feature_dataset(default_synth_config());
  ExperimentConfig shared;
  shared.n_runs = 20;
  Replication r;
  r.results = compare_methods(data, default_methods(shared));
  r.seconds = seconds_since(t0);
  return r;
}

const ExperimentResult& find(const Replication& r, const std::string& name) {
  for (const auto& res : r.results)
    if (res.config.name == name) return res;
  throw std::runtime_error("missing method " + name);
}

// 7. Directional replication of the interval comparison.
Verdict directional_replication(const Replication& rep) {
  const auto& naive = find(rep, "naive");
  const auto& cci = find(rep, "cci");
  std::size_t abst_wins = 0, width_wins = 0;
  for (std::size_t i = 0; i < cci.runs.size(); ++i) {
    abst_wins += cci.runs[i].report.abstention_proportion < naive.runs[i].report.abstention_proportion;
    width_wins += *cci.runs[i].report.width_all < *naive.runs[i].report.width_all;
  }
  return {abst_wins >= kReplicationWins && width_wins >= kReplicationWins && rep.seconds < kReplicationBudgetS,
          "abstention wins " + std::to_string(abst_wins) + "/20, width wins " + std::to_string(width_wins) +
              "/20 (need >= 16 each); cci abstention " + fmt("%.2f", cci.aggregate.abstention.mean) + " vs naive " +
              fmt("%.2f", naive.aggregate.abstention.mean) + ", width " + fmt("%.2f", cci.aggregate.width_all->mean) +
              " vs " + fmt("%.2f", naive.aggregate.width_all->mean) + "; " + fmt("%.1f", rep.seconds) + " s < 300 s"};
}

// 8. Baseline sanity.
Verdict baseline_sanity(const Replication& rep) {
  const double rg = find(rep, "random_guess").aggregate.accuracy.mean;
  const double base = find(rep, "base").aggregate.accuracy.mean;
  return {rg >= kRandomLo && rg <= kRandomHi && base - rg >= kBaseMargin,
          "random guess " + fmt("%.3f", rg) + " in [0.35, 0.65]; base " + fmt("%.3f", base) + " exceeds it by " +
              fmt("%.3f", base - rg) + " >= 0.10"};
}

// 9. Exactly one outcome per interval, consistent with the reported rule.
Verdict decision_totality() {
  Rng rng(9009);
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    double a = rng.uniform(), b = rng.uniform();
    if (i % 20 == 0) b = a;
    const ProbInterval iv{std::min(a, b), std::max(a, b)};
    const double alpha = rng.uniform(0.01, 0.99);
    const auto d = decide(iv, alpha);
    const double pr = iv.hi > iv.lo ? std::clamp((iv.hi - 0.5) / (iv.hi - iv.lo), 0.0, 1.0) : (iv.lo >= 0.5 ? 1.0 : 0.0);
    const double pl = 1.0 - pr;
    const bool uti_bound = iv.lo >= 0.5, no_bound = iv.hi < 0.5;
    const bool uti_tail = pr >= 1.0 - alpha, no_tail = pl >= 1.0 - alpha;
    DecisionRule want = DecisionRule::kAbstain;
    if (uti_bound) want = DecisionRule::kLowerBound;
    else if (no_bound) want = DecisionRule::kUpperBound;
    else if (uti_tail) want = DecisionRule::kRightTail;
    else if (no_tail) want = DecisionRule::kLeftTail;
    const Outcome want_outcome = want == DecisionRule::kLowerBound || want == DecisionRule::kRightTail ? Outcome::kUti
                                 : want == DecisionRule::kAbstain                                       ? Outcome::kAbstain
                                                                                                        : Outcome::kNoUti;
    if (d.rule_fired != want || d.outcome != want_outcome) ++violations;
  }
  return {violations == 0, std::to_string(violations) + " inconsistent decisions over 10000 random intervals"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cci");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  return cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

// Runs generate, features, run and plot into root; returns nonzero on any failure.
int pipeline(const fs::path& root) {
  fs::remove_all(root);
  fs::create_directories(root);
  const auto cfg = root / "cfg.json";
  std::ofstream(cfg) << R"({"output_dir": "out", "train": {"forest": {"n_trees": 25}},
  "experiment": {"n_runs": 3, "dataset": "out/extracted.csv"}})";
  const auto out = root / "out";
  int rc = cli({"generate", "--config", cfg.string()});
  rc |= cli({"features", "--logs", (out / "logs").string(), "--labels", (out / "labels.csv").string(), "--output",
             (out / "extracted.csv").string()});
  rc |= cli({"run", "--config", cfg.string()});
  rc |= cli({"plot", "--config", cfg.string(), "--predictions", (out / "predictions").string()});
  return rc;
}

// 10. Two executions of the pipeline produce identical bytes.
Verdict end_to_end_determinism() {
  const fs::path base = fs::temp_directory_path() / "cci_acceptance_e2e";
  const int rc = pipeline(base / "a") | pipeline(base / "b");
  std::size_t compared = 0, differing = 0, svgs = 0;
  auto same = [&](const fs::path& rel) {
    ++compared;
    const auto a = base / "a" / "out" / rel, b = base / "b" / "out" / rel;
    if (!fs::exists(a) || slurp(a) != slurp(b)) ++differing;
  };
  for (const char* f : {"report.json", "report.csv", "table1.txt", "extracted.csv", "features.csv"}) same(f);
  if (fs::exists(base / "a" / "out" / "plots")) {
    for (const auto& e : fs::directory_iterator(base / "a" / "out" / "plots")) {
      if (e.path().extension() == ".svg") {
        ++svgs;
        same(fs::path("plots") / e.path().filename());
      }
    }
  }
  fs::remove_all(base);
  return {rc == 0 && differing == 0 && svgs > 0,
          std::to_string(differing) + " of " + std::to_string(compared) + " artifacts differ (" +
              std::to_string(svgs) + " SVGs), exit codes " + (rc == 0 ? "0" : "nonzero")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Verdict()> check;
  };
  Replication rep;
  bool rep_ready = false;
  auto replication = [&]() -> const Replication& {
    if (!rep_ready) {
      rep = replicate_table();
      rep_ready = true;
    }
    return rep;
  };
  const std::vector<Criterion> criteria = {
      {"coverage_guarantee", coverage_guarantee},
      {"quantile_oracle", quantile_oracle},
      {"interval_oracle", interval_oracle},
      {"monotonicity_symmetry", monotonicity_symmetry},
      {"gradient_checks", gradient_checks},
      {"golden_features", golden_features},
      {"directional_replication", [&] { return directional_replication(replication()); }},
      {"baseline_sanity", [&] { return baseline_sanity(replication()); }},
      {"decision_totality", decision_totality},
      {"end_to_end_determinism", end_to_end_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %2zu %-24s %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
