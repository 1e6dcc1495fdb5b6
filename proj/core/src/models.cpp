#include "cci/models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cci/rng.hpp"
#include "json.hpp"

namespace cci {
namespace {

using nlohmann::json;

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double clip_prob(double p) { return std::clamp(p, kProbClip, 1.0 - kProbClip); }

double logit(double p) { return std::log(p / (1.0 - p)); }

void check_training_data(const Matrix& x, std::span<const int> y, std::size_t n_names, const char* who) {
  if (x.rows() == 0) throw std::invalid_argument(std::string(who) + ": empty training set");
  if (x.rows() != y.size()) throw std::invalid_argument(std::string(who) + ": row/label count mismatch");
  if (x.cols() != n_names) throw std::invalid_argument(std::string(who) + ": feature name count mismatch");
  for (int label : y) {
    if (label != 0 && label != 1) throw std::invalid_argument(std::string(who) + ": labels must be 0 or 1");
  }
}

// Fraction of positives when y is single-class, nullopt otherwise.
std::optional<double> degenerate_prior(std::span<const int> y) {
  const auto positives = std::count(y.begin(), y.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(y.size())) {
    return static_cast<double>(positives) / static_cast<double>(y.size());
  }
  return std::nullopt;
}

std::string degenerate_warning(double prior) {
  return "training labels are single-class; emitting constant probability " + std::to_string(clip_prob(prior));
}

// ---------------------------------------------------------------- forest ---

struct TreeBuilder {
  const Matrix& x;
  std::span<const int> y;
  const ForestConfig& config;
  Tree tree;

  int build(std::vector<std::size_t>& samples, std::size_t depth) {
    const std::size_t n = samples.size();
    std::size_t pos = 0;
    for (auto i : samples) pos += static_cast<std::size_t>(y[i]);

    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    tree.nodes[index].prob = (static_cast<double>(pos) + 1.0) / (static_cast<double>(n) + 2.0);

    const bool pure = pos == 0 || pos == n;
    const bool depth_capped = config.max_depth > 0 && depth >= config.max_depth;
    if (pure || depth_capped || n < 2 * config.min_leaf) return index;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_impurity = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order = samples;
    for (std::size_t f = 0; f < x.cols(); ++f) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
      std::size_t left_n = 0, left_pos = 0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        ++left_n;
        left_pos += static_cast<std::size_t>(y[order[k]]);
        const double v = x(order[k], f);
        const double next = x(order[k + 1], f);
        if (!(v < next)) continue;
        const std::size_t right_n = n - left_n;
        if (left_n < config.min_leaf || right_n < config.min_leaf) continue;
        const std::size_t right_pos = pos - left_pos;
        const double impurity = weighted_gini(left_n, left_pos) + weighted_gini(right_n, right_pos);
        if (impurity < best_impurity - 1e-12) {
          best_impurity = impurity;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (v + next);
        }
      }
    }
    if (best_feature < 0) return index;

    std::vector<std::size_t> left, right;
    for (auto i : samples) {
      (x(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? left : right).push_back(i);
    }
    samples.clear();
    samples.shrink_to_fit();

    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    TreeNode& node = tree.nodes[index];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return index;
  }

  // n * gini(node) so that children sum to the split's weighted impurity.
  static double weighted_gini(std::size_t n, std::size_t pos) {
    if (n == 0) return 0.0;
    const double p = static_cast<double>(pos) / static_cast<double>(n);
    return static_cast<double>(n) * 2.0 * p * (1.0 - p);
  }
};

// ------------------------------------------------------------------ json ---

json config_to_json(const TrainConfig& c) {
  return json{{"seed", c.seed},
              {"logistic", {{"inverse_reg_c", c.logistic.inverse_reg_c},
                            {"max_iters", c.logistic.max_iters},
                            {"tol", c.logistic.tol}}},
              {"mlp", {{"hidden", c.mlp.hidden},
                       {"l2_alpha", c.mlp.l2_alpha},
                       {"learning_rate", c.mlp.learning_rate},
                       {"max_epochs", c.mlp.max_epochs},
                       {"tol", c.mlp.tol}}},
              {"forest", {{"n_trees", c.forest.n_trees},
                          {"max_depth", c.forest.max_depth},
                          {"min_leaf", c.forest.min_leaf},
                          {"bootstrap", c.forest.bootstrap}}}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  const auto& l = j.at("logistic");
  c.logistic.inverse_reg_c = l.at("inverse_reg_c").get<double>();
  c.logistic.max_iters = l.at("max_iters").get<int>();
  c.logistic.tol = l.at("tol").get<double>();
  const auto& m = j.at("mlp");
  c.mlp.hidden = m.at("hidden").get<std::size_t>();
  c.mlp.l2_alpha = m.at("l2_alpha").get<double>();
  c.mlp.learning_rate = m.at("learning_rate").get<double>();
  c.mlp.max_epochs = m.at("max_epochs").get<int>();
  c.mlp.tol = m.at("tol").get<double>();
  const auto& f = j.at("forest");
  c.forest.n_trees = f.at("n_trees").get<std::size_t>();
  c.forest.max_depth = f.at("max_depth").get<std::size_t>();
  c.forest.min_leaf = f.at("min_leaf").get<std::size_t>();
  c.forest.bootstrap = f.at("bootstrap").get<bool>();
  return c;
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLogistic:
      return "logistic";
    case ModelKind::kMlp:
      return "mlp";
    case ModelKind::kForest:
      return "forest";
    case ModelKind::kRandomGuess:
      return "random_guess";
  }
  return "logistic";
}

std::optional<ModelKind> parse_model_kind(std::string_view text) {
  for (auto k : {ModelKind::kLogistic, ModelKind::kMlp, ModelKind::kForest, ModelKind::kRandomGuess}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (!(logistic.inverse_reg_c > 0.0)) throw std::invalid_argument("logistic.inverse_reg_c must be > 0");
  if (logistic.max_iters <= 0) throw std::invalid_argument("logistic.max_iters must be > 0");
  if (!(logistic.tol > 0.0)) throw std::invalid_argument("logistic.tol must be > 0");
  if (mlp.hidden == 0) throw std::invalid_argument("mlp.hidden must be > 0");
  if (!(mlp.l2_alpha >= 0.0)) throw std::invalid_argument("mlp.l2_alpha must be >= 0");
  if (!(mlp.learning_rate > 0.0)) throw std::invalid_argument("mlp.learning_rate must be > 0");
  if (mlp.max_epochs <= 0) throw std::invalid_argument("mlp.max_epochs must be > 0");
  if (!(mlp.tol > 0.0)) throw std::invalid_argument("mlp.tol must be > 0");
  if (forest.n_trees == 0) throw std::invalid_argument("forest.n_trees must be > 0");
  if (forest.min_leaf == 0) throw std::invalid_argument("forest.min_leaf must be > 0");
}

Scaler Scaler::fit(const Matrix& x) {
  Scaler s;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const auto col = x.column(c);
    const double sd = population_std(col);
    s.mean.push_back(cci::mean(col));
    s.scale.push_back(sd > 1e-12 ? sd : 1.0);
  }
  return s;
}

std::vector<double> Scaler::transform(std::span<const double> row) const {
  std::vector<double> out(row.size());
  for (std::size_t c = 0; c < row.size(); ++c) out[c] = (row[c] - mean[c]) / scale[c];
  return out;
}

Matrix Scaler::transform(const Matrix& x) const {
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = (x(r, c) - mean[c]) / scale[c];
  }
  return out;
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(size());
  flat.insert(flat.end(), w1.begin(), w1.end());
  flat.insert(flat.end(), b1.begin(), b1.end());
  flat.insert(flat.end(), w2.begin(), w2.end());
  flat.push_back(b2);
  return flat;
}

void MlpParams::assign(std::span<const double> flat) {
  if (flat.size() != size()) throw std::invalid_argument("MlpParams::assign: size mismatch");
  auto it = flat.begin();
  std::copy_n(it, w1.size(), w1.begin());
  it += static_cast<std::ptrdiff_t>(w1.size());
  std::copy_n(it, b1.size(), b1.begin());
  it += static_cast<std::ptrdiff_t>(b1.size());
  std::copy_n(it, w2.size(), w2.begin());
  it += static_cast<std::ptrdiff_t>(w2.size());
  b2 = *it;
}

double Tree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].prob;
}

std::size_t Tree::depth() const {
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (nodes[i].feature >= 0) {
      stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
    }
  }
  return deepest;
}

ProbModel::ProbModel(std::vector<std::string> feature_names, Scaler scaler, ModelParams params, TrainConfig config)
    : feature_names_(std::move(feature_names)),
      scaler_(std::move(scaler)),
      params_(std::move(params)),
      config_(config) {
  const std::size_t d = feature_names_.size();
  if (scaler_.mean.size() != d || scaler_.scale.size() != d) {
    throw std::invalid_argument("ProbModel: scaler dimension does not match feature names");
  }
  if (const auto* lp = std::get_if<LogisticParams>(&params_); lp && lp->weights.size() != d) {
    throw std::invalid_argument("ProbModel: logistic weight count does not match feature names");
  }
  if (const auto* mp = std::get_if<MlpParams>(&params_);
      mp && (mp->inputs != d || mp->w1.size() != mp->hidden * d || mp->b1.size() != mp->hidden ||
             mp->w2.size() != mp->hidden)) {
    throw std::invalid_argument("ProbModel: network shape does not match feature names");
  }
}

ModelKind ProbModel::kind() const {
  switch (params_.index()) {
    case 0:
      return ModelKind::kLogistic;
    case 1:
      return ModelKind::kMlp;
    case 2:
      return ModelKind::kForest;
    default:
      return ModelKind::kRandomGuess;
  }
}

double ProbModel::predict_proba(std::span<const double> x) const {
  if (x.size() != arity()) {
    throw std::invalid_argument("predict_proba: expected " + std::to_string(arity()) + " features, got " +
                                std::to_string(x.size()));
  }
  if (const auto* rg = std::get_if<RandomGuessParams>(&params_)) {
    // Pure function of (seed, row) so predictions are reproducible and thread-safe.
    std::uint64_t h = rg->seed;
    for (double v : x) h = mix_seed(h, std::bit_cast<std::uint64_t>(v));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  }
  const auto z = scaler_.transform(x);
  if (const auto* lp = std::get_if<LogisticParams>(&params_)) {
    double s = lp->bias;
    for (std::size_t i = 0; i < z.size(); ++i) s += lp->weights[i] * z[i];
    return clip_prob(sigmoid(s));
  }
  if (const auto* mp = std::get_if<MlpParams>(&params_)) return clip_prob(mlp_forward(*mp, z));
  const auto& forest = std::get<ForestParams>(params_);
  double total = 0.0;
  for (const auto& t : forest.trees) total += t.predict(z);
  return total / static_cast<double>(forest.trees.size());
}

std::vector<double> ProbModel::predict_proba(const Matrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict_proba(x.row(r));
  return out;
}

std::vector<double> ProbModel::tree_probas(std::span<const double> x) const {
  const auto* forest = std::get_if<ForestParams>(&params_);
  if (forest == nullptr) throw std::logic_error("tree_probas: model is not a forest");
  if (x.size() != arity()) throw std::invalid_argument("tree_probas: arity mismatch");
  const auto z = scaler_.transform(x);
  std::vector<double> out;
  out.reserve(forest->trees.size());
  for (const auto& t : forest->trees) out.push_back(t.predict(z));
  return out;
}

LogisticObjective logistic_objective(const Matrix& x, std::span<const int> y, const LogisticParams& params,
                                     double inverse_reg_c) {
  LogisticObjective out;
  out.grad_weights.assign(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    double z = params.bias;
    for (std::size_t c = 0; c < row.size(); ++c) z += params.weights[c] * row[c];
    out.value += softplus(z) - y[r] * z;
    const double dz = sigmoid(z) - y[r];
    for (std::size_t c = 0; c < row.size(); ++c) out.grad_weights[c] += dz * row[c];
    out.grad_bias += dz;
  }
  const double lambda = 1.0 / inverse_reg_c;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    out.value += 0.5 * lambda * params.weights[c] * params.weights[c];
    out.grad_weights[c] += lambda * params.weights[c];
  }
  return out;
}

ProbModel fit_logistic(const Matrix& x, std::span<const int> y, std::vector<std::string> feature_names,
                       const TrainConfig& config) {
  config.validate();
  check_training_data(x, y, feature_names.size(), "fit_logistic");
  Scaler scaler = Scaler::fit(x);
  LogisticParams params{std::vector<double>(x.cols(), 0.0), 0.0};

  if (const auto prior = degenerate_prior(y)) {
    params.bias = logit(clip_prob(*prior));
    ProbModel model(std::move(feature_names), std::move(scaler), params, config);
    model.add_warning(degenerate_warning(*prior));
    return model;
  }

  const Matrix z = scaler.transform(x);
  const double n = static_cast<double>(x.rows());
  const double c = config.logistic.inverse_reg_c;
  double step = 1.0;
  auto obj = logistic_objective(z, y, params, c);
  for (int iter = 0; iter < config.logistic.max_iters; ++iter) {
    double gmax = std::abs(obj.grad_bias);
    for (double g : obj.grad_weights) gmax = std::max(gmax, std::abs(g));
    if (gmax / n < config.logistic.tol) break;

    double grad_sq = obj.grad_bias * obj.grad_bias;
    for (double g : obj.grad_weights) grad_sq += g * g;

    // Armijo backtracking on the per-sample objective.
    step = std::min(step * 2.0, 1e3);
    while (true) {
      LogisticParams trial = params;
      for (std::size_t i = 0; i < trial.weights.size(); ++i) trial.weights[i] -= step * obj.grad_weights[i] / n;
      trial.bias -= step * obj.grad_bias / n;
      auto trial_obj = logistic_objective(z, y, trial, c);
      if (trial_obj.value / n <= obj.value / n - 1e-4 * step * grad_sq / (n * n) || step < 1e-12) {
        params = std::move(trial);
        obj = std::move(trial_obj);
        break;
      }
      step *= 0.5;
    }
  }
  return ProbModel(std::move(feature_names), std::move(scaler), std::move(params), config);
}

double mlp_forward(const MlpParams& p, std::span<const double> x) {
  double z = p.b2;
  for (std::size_t h = 0; h < p.hidden; ++h) {
    double a = p.b1[h];
    for (std::size_t i = 0; i < p.inputs; ++i) a += p.w1[h * p.inputs + i] * x[i];
    if (a > 0.0) z += p.w2[h] * a;
  }
  return sigmoid(z);
}

MlpObjective mlp_objective(const Matrix& x, std::span<const int> y, const MlpParams& p, double l2_alpha) {
  const std::size_t n = x.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  MlpObjective out;
  out.grad.assign(p.size(), 0.0);
  const std::size_t off_b1 = p.w1.size();
  const std::size_t off_w2 = off_b1 + p.b1.size();
  const std::size_t off_b2 = off_w2 + p.w2.size();

  std::vector<double> act(p.hidden);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = x.row(r);
    double z = p.b2;
    for (std::size_t h = 0; h < p.hidden; ++h) {
      double a = p.b1[h];
      for (std::size_t i = 0; i < p.inputs; ++i) a += p.w1[h * p.inputs + i] * row[i];
      act[h] = a;
      if (a > 0.0) z += p.w2[h] * a;
    }
    out.value += (softplus(z) - y[r] * z) * inv_n;
    const double dz = (sigmoid(z) - y[r]) * inv_n;
    out.grad[off_b2] += dz;
    for (std::size_t h = 0; h < p.hidden; ++h) {
      if (act[h] <= 0.0) continue;
      out.grad[off_w2 + h] += dz * act[h];
      const double da = dz * p.w2[h];
      out.grad[off_b1 + h] += da;
      for (std::size_t i = 0; i < p.inputs; ++i) out.grad[h * p.inputs + i] += da * row[i];
    }
  }
  const double reg = l2_alpha * inv_n;
  for (std::size_t k = 0; k < p.w1.size(); ++k) {
    out.value += 0.5 * reg * p.w1[k] * p.w1[k];
    out.grad[k] += reg * p.w1[k];
  }
  for (std::size_t h = 0; h < p.w2.size(); ++h) {
    out.value += 0.5 * reg * p.w2[h] * p.w2[h];
    out.grad[off_w2 + h] += reg * p.w2[h];
  }
  return out;
}

ProbModel fit_mlp(const Matrix& x, std::span<const int> y, std::vector<std::string> feature_names,
                  const TrainConfig& config) {
  config.validate();
  check_training_data(x, y, feature_names.size(), "fit_mlp");
  Scaler scaler = Scaler::fit(x);

  MlpParams p;
  p.inputs = x.cols();
  p.hidden = config.mlp.hidden;
  p.w1.assign(p.hidden * p.inputs, 0.0);
  p.b1.assign(p.hidden, 0.0);
  p.w2.assign(p.hidden, 0.0);

  if (const auto prior = degenerate_prior(y)) {
    p.b2 = logit(clip_prob(*prior));
    ProbModel model(std::move(feature_names), std::move(scaler), p, config);
    model.add_warning(degenerate_warning(*prior));
    return model;
  }

  // Glorot-uniform initialization.
  Rng rng(mix_seed(config.seed, 0x6d6c70));
  const double bound1 = std::sqrt(6.0 / static_cast<double>(p.inputs + p.hidden));
  const double bound2 = std::sqrt(6.0 / static_cast<double>(p.hidden + 1));
  for (auto& w : p.w1) w = rng.uniform(-bound1, bound1);
  for (auto& b : p.b1) b = rng.uniform(-bound1, bound1);
  for (auto& w : p.w2) w = rng.uniform(-bound2, bound2);
  p.b2 = rng.uniform(-bound2, bound2);

  const Matrix z = scaler.transform(x);
  auto flat = p.flatten();
  double best = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int epoch = 0; epoch < config.mlp.max_epochs; ++epoch) {
    const auto obj = mlp_objective(z, y, p, config.mlp.l2_alpha);
    if (obj.value > best - config.mlp.tol) {
      if (++stalled >= 10) break;
    } else {
      stalled = 0;
    }
    best = std::min(best, obj.value);
    for (std::size_t k = 0; k < flat.size(); ++k) flat[k] -= config.mlp.learning_rate * obj.grad[k];
    p.assign(flat);
  }
  return ProbModel(std::move(feature_names), std::move(scaler), std::move(p), config);
}

ProbModel fit_forest(const Matrix& x, std::span<const int> y, std::vector<std::string> feature_names,
                     const TrainConfig& config) {
  config.validate();
  check_training_data(x, y, feature_names.size(), "fit_forest");
  Scaler scaler = Scaler::fit(x);
  const Matrix z = scaler.transform(x);

  ForestParams forest;
  forest.trees.reserve(config.forest.n_trees);
  const std::size_t n = x.rows();
  for (std::size_t t = 0; t < config.forest.n_trees; ++t) {
    std::vector<std::size_t> samples(n);
    if (config.forest.bootstrap) {
      Rng rng(mix_seed(config.seed, 0x7265650000ULL + t));
      for (auto& s : samples) s = static_cast<std::size_t>(rng.below(n));
    } else {
      std::iota(samples.begin(), samples.end(), std::size_t{0});
    }
    TreeBuilder builder{z, y, config.forest, {}};
    builder.build(samples, 0);
    forest.trees.push_back(std::move(builder.tree));
  }
  return ProbModel(std::move(feature_names), std::move(scaler), std::move(forest), config);
}

ProbModel make_random_guess(std::vector<std::string> feature_names, std::uint64_t seed) {
  const std::size_t d = feature_names.size();
  TrainConfig config;
  config.seed = seed;
  return ProbModel(std::move(feature_names), Scaler{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)},
                   RandomGuessParams{seed}, config);
}

ProbModel fit_model(ModelKind kind, const Matrix& x, std::span<const int> y, std::vector<std::string> feature_names,
                    const TrainConfig& config) {
  switch (kind) {
    case ModelKind::kLogistic:
      return fit_logistic(x, y, std::move(feature_names), config);
    case ModelKind::kMlp:
      return fit_mlp(x, y, std::move(feature_names), config);
    case ModelKind::kForest:
      return fit_forest(x, y, std::move(feature_names), config);
    case ModelKind::kRandomGuess:
      return make_random_guess(std::move(feature_names), config.seed);
  }
  throw std::invalid_argument("fit_model: unknown model kind");
}

TrainConfig grid_search(ModelKind kind, const Matrix& x, std::span<const int> y, const TrainConfig& base) {
  if (kind != ModelKind::kLogistic && kind != ModelKind::kMlp) return base;
  if (x.rows() < 6) throw std::invalid_argument("grid_search: need at least 6 rows for 3-fold CV");

  // Stratified fold assignment: deal each class round-robin after a seeded shuffle.
  std::vector<int> fold(x.rows());
  Rng rng(mix_seed(base.seed, 0x67726964));
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == cls) idx.push_back(i);
    }
    rng.shuffle(idx);
    for (std::size_t k = 0; k < idx.size(); ++k) fold[idx[k]] = static_cast<int>(k % 3);
  }

  std::vector<TrainConfig> candidates;
  if (kind == ModelKind::kLogistic) {
    for (double c : {0.01, 0.1, 1.0, 10.0}) {
      TrainConfig cfg = base;
      cfg.logistic.inverse_reg_c = c;
      candidates.push_back(cfg);
    }
  } else {
    for (double alpha : {1e-4, 1e-3, 1e-2}) {
      for (std::size_t hidden : {25, 50}) {
        TrainConfig cfg = base;
        cfg.mlp.l2_alpha = alpha;
        cfg.mlp.hidden = hidden;
        candidates.push_back(cfg);
      }
    }
  }

  std::vector<std::string> names(x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) names[c] = "x" + std::to_string(c);

  TrainConfig best = base;
  double best_f1 = -1.0;
  for (const auto& cfg : candidates) {
    double f1_sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      std::vector<std::size_t> train_idx, val_idx;
      for (std::size_t i = 0; i < x.rows(); ++i) (fold[i] == k ? val_idx : train_idx).push_back(i);
      std::vector<int> ytr, yva;
      for (auto i : train_idx) ytr.push_back(y[i]);
      for (auto i : val_idx) yva.push_back(y[i]);
      const auto model = fit_model(kind, x.select_rows(train_idx), ytr, names, cfg);
      const auto probs = model.predict_proba(x.select_rows(val_idx));
      int tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < probs.size(); ++i) {
        const int pred = probs[i] >= 0.5 ? 1 : 0;
        tp += pred == 1 && yva[i] == 1;
        fp += pred == 1 && yva[i] == 0;
        fn += pred == 0 && yva[i] == 1;
      }
      f1_sum += tp > 0 ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0;
    }
    if (f1_sum > best_f1 + 1e-12) {
      best_f1 = f1_sum;
      best = cfg;
    }
  }
  return best;
}

std::string ProbModel::to_json() const {
  json j;
  j["kind"] = std::string(cci::to_string(kind()));
  j["feature_names"] = feature_names_;
  j["scaler"] = {{"mean", scaler_.mean}, {"scale", scaler_.scale}};
  j["config"] = config_to_json(config_);
  j["seed"] = config_.seed;
  json params;
  if (const auto* lp = std::get_if<LogisticParams>(&params_)) {
    params = {{"weights", lp->weights}, {"bias", lp->bias}};
  } else if (const auto* mp = std::get_if<MlpParams>(&params_)) {
    params = {{"inputs", mp->inputs}, {"hidden", mp->hidden}, {"flat", mp->flatten()}};
  } else if (const auto* fp = std::get_if<ForestParams>(&params_)) {
    json trees = json::array();
    for (const auto& t : fp->trees) {
      json nodes = json::array();
      for (const auto& nd : t.nodes) nodes.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.prob});
      trees.push_back(std::move(nodes));
    }
    params = {{"trees", std::move(trees)}};
  } else {
    params = {{"seed", std::get<RandomGuessParams>(params_).seed}};
  }
  j["params"] = std::move(params);
  j["warnings"] = warnings_;
  return j.dump(1);
}

ProbModel ProbModel::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    const auto kind = parse_model_kind(j.at("kind").get<std::string>());
    if (!kind) throw std::invalid_argument("unknown model kind");
    auto names = j.at("feature_names").get<std::vector<std::string>>();
    Scaler scaler{j.at("scaler").at("mean").get<std::vector<double>>(),
                  j.at("scaler").at("scale").get<std::vector<double>>()};
    const TrainConfig config = config_from_json(j.at("config"));
    const auto& p = j.at("params");
    ModelParams params;
    switch (*kind) {
      case ModelKind::kLogistic:
        params = LogisticParams{p.at("weights").get<std::vector<double>>(), p.at("bias").get<double>()};
        break;
      case ModelKind::kMlp: {
        MlpParams mp;
        mp.inputs = p.at("inputs").get<std::size_t>();
        mp.hidden = p.at("hidden").get<std::size_t>();
        mp.w1.assign(mp.inputs * mp.hidden, 0.0);
        mp.b1.assign(mp.hidden, 0.0);
        mp.w2.assign(mp.hidden, 0.0);
        mp.assign(p.at("flat").get<std::vector<double>>());
        params = std::move(mp);
        break;
      }
      case ModelKind::kForest: {
        ForestParams fp;
        for (const auto& t : p.at("trees")) {
          Tree tree;
          for (const auto& nd : t) {
            tree.nodes.push_back(TreeNode{nd.at(0).get<int>(), nd.at(1).get<double>(), nd.at(2).get<int>(),
                                          nd.at(3).get<int>(), nd.at(4).get<double>()});
          }
          fp.trees.push_back(std::move(tree));
        }
        if (fp.trees.empty()) throw std::invalid_argument("forest has no trees");
        params = std::move(fp);
        break;
      }
      case ModelKind::kRandomGuess:
        params = RandomGuessParams{p.at("seed").get<std::uint64_t>()};
        break;
    }
    ProbModel model(std::move(names), std::move(scaler), std::move(params), config);
    if (j.contains("warnings")) {
      for (const auto& w : j.at("warnings")) model.add_warning(w.get<std::string>());
    }
    return model;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("model JSON: ") + e.what());
  }
}

}  // namespace cci
