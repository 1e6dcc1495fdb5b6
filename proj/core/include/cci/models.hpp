#pragma once

// Probability-emitting binary classifiers written from scratch: L2 logistic
// regression, a one-hidden-layer ReLU network, a bagged CART forest and a
// seeded random-guess baseline. Every fitted model carries its own
// standardization fitted on the training rows only.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cci/matrix.hpp"

namespace cci {

enum class ModelKind { kLogistic, kMlp, kForest, kRandomGuess };

std::string_view to_string(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view text);

struct LogisticConfig {
  double inverse_reg_c = 0.1;
  int max_iters = 5000;
  double tol = 1e-6;  // on the max-abs gradient of the per-sample objective
};

struct MlpConfig {
  std::size_t hidden = 50;
  double l2_alpha = 1e-4;
  double learning_rate = 0.1;  // constant schedule
  int max_epochs = 3000;
  double tol = 1e-7;  // stop after 10 epochs improving by less than this
};

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;  // 0 grows until leaves are pure or unsplittable
  std::size_t min_leaf = 1;
  bool bootstrap = true;
};

struct TrainConfig {
  LogisticConfig logistic;
  MlpConfig mlp;
  ForestConfig forest;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument on non-positive settings.
  void validate() const;
};

// Lower/upper clip applied to every emitted probability of the parametric models.
inline constexpr double kProbClip = 1e-6;

struct Scaler {
  std::vector<double> mean;
  std::vector<double> scale;  // population std, 1 for constant columns

  static Scaler fit(const Matrix& x);
  std::vector<double> transform(std::span<const double> row) const;
  Matrix transform(const Matrix& x) const;
};

struct LogisticParams {
  std::vector<double> weights;
  double bias = 0.0;
};

struct MlpParams {
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  std::vector<double> w1;  // hidden x inputs, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0.0;

  // Flat view (w1, b1, w2, b2) used by optimizers and gradient checks.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  std::size_t size() const { return w1.size() + b1.size() + w2.size() + 1; }
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double prob = 0.5;  // Laplace-smoothed positive fraction, leaves only
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  std::size_t depth() const;
};

struct ForestParams {
  std::vector<Tree> trees;
};

struct RandomGuessParams {
  std::uint64_t seed = 0;
};

using ModelParams = std::variant<LogisticParams, MlpParams, ForestParams, RandomGuessParams>;

class ProbModel {
 public:
  ProbModel(std::vector<std::string> feature_names, Scaler scaler, ModelParams params, TrainConfig config);

  ModelKind kind() const;
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  std::size_t arity() const { return feature_names_.size(); }
  const Scaler& scaler() const { return scaler_; }
  const ModelParams& params() const { return params_; }
  const TrainConfig& config() const { return config_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

  // Positive-class probability for one raw (unscaled) row. Throws
  // std::invalid_argument on arity mismatch.
  double predict_proba(std::span<const double> x) const;
  std::vector<double> predict_proba(const Matrix& x) const;

  // Per-tree probabilities; forest models only.
  std::vector<double> tree_probas(std::span<const double> x) const;

  std::string to_json() const;
  static ProbModel from_json(std::string_view text);

 private:
  std::vector<std::string> feature_names_;
  Scaler scaler_;
  ModelParams params_;
  TrainConfig config_;
  std::vector<std::string> warnings_;
};

// Objective sum_i logloss_i + ||w||^2 / (2C) on standardized inputs; the
// bias is not penalized.
struct LogisticObjective {
  double value = 0.0;
  std::vector<double> grad_weights;
  double grad_bias = 0.0;
};
LogisticObjective logistic_objective(const Matrix& x, std::span<const int> y, const LogisticParams& params,
                                     double inverse_reg_c);

// Objective mean_i logloss_i + alpha / (2n) * (||W1||^2 + ||w2||^2).
struct MlpObjective {
  double value = 0.0;
  std::vector<double> grad;  // same layout as MlpParams::flatten()
};
MlpObjective mlp_objective(const Matrix& x, std::span<const int> y, const MlpParams& params, double l2_alpha);
double mlp_forward(const MlpParams& params, std::span<const double> x);

ProbModel fit_logistic(const Matrix& x, std::span<const int> y, std::vector<std::string> feature_names,
                       const TrainConfig& config);
ProbModel fit_mlp(const Matrix& x, std::span<const int> y, std::vector<std::string> feature_names,
                  const TrainConfig& config);
ProbModel fit_forest(const Matrix& x, std::span<const int> y, std::vector<std::string> feature_names,
                     const TrainConfig& config);
ProbModel make_random_guess(std::vector<std::string> feature_names, std::uint64_t seed);

ProbModel fit_model(ModelKind kind, const Matrix& x, std::span<const int> y,
                    std::vector<std::string> feature_names, const TrainConfig& config);

// Optional 3-fold stratified grid search scored by F1: C for logistic,
// (l2_alpha, hidden) for the network. Other kinds return `base` unchanged.
TrainConfig grid_search(ModelKind kind, const Matrix& x, std::span<const int> y, const TrainConfig& base);

double sigmoid(double z);

}  // namespace cci
