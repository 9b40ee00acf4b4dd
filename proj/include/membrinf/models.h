#ifndef MEMBRINF_MODELS_H_
#define MEMBRINF_MODELS_H_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "membrinf/datakit.h"

namespace membrinf {

// A point on the k-simplex returned by a classifier for one query.
class ProbabilityVector {
 public:
  ProbabilityVector() = default;
  explicit ProbabilityVector(std::vector<double> probs)
      : probs_(std::move(probs)) {}

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  auto begin() const { return probs_.begin(); }
  auto end() const { return probs_.end(); }
  const std::vector<double>& values() const { return probs_; }
  std::span<const double> view() const { return probs_; }

  // Index of the largest entry; ties go to the lowest index.
  int Argmax() const;
  double Max() const;

  bool operator==(const ProbabilityVector&) const = default;

 private:
  std::vector<double> probs_;
};

// Every entry in [0,1] and the entries sum to 1 within `tol`.
bool IsValidSimplex(std::span<const double> p, double tol = 1e-9);
int ArgmaxLowest(std::span<const double> p);

enum class ModelKind { kDecisionTree, kKnn, kLogisticRegression, kNaiveBayes };

inline constexpr ModelKind kAllModelKinds[] = {
    ModelKind::kDecisionTree, ModelKind::kKnn, ModelKind::kLogisticRegression,
    ModelKind::kNaiveBayes};

std::string_view ModelKindName(ModelKind kind);  // "DT", "kNN", "LR", "NB"
ModelKind ParseModelKind(std::string_view name);

struct TreeConfig {
  int max_depth = -1;  // negative: unlimited
  int min_samples_split = 2;
  double ccp_alpha = 0.0;  // cost-complexity pruning strength
};

struct KnnConfig {
  int neighbors = 5;
};

struct LogisticConfig {
  double learning_rate = 0.1;
  int epochs = 500;
  double l2 = 0.0;
};

struct BayesConfig {
  // Variance floor as a fraction of the largest feature variance.
  double var_smoothing = 1e-9;
};

struct TrainConfig {
  TreeConfig tree;
  KnnConfig knn;
  LogisticConfig logistic;
  BayesConfig bayes;

  void Validate() const;
};

// ---------------------------------------------------------------------------
// Fitted model states.

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::size_t samples = 0;
  double gini = 0.0;
  std::vector<double> distribution;  // class frequencies at this node
};

class DecisionTreeModel {
 public:
  DecisionTreeModel() = default;
  DecisionTreeModel(std::vector<TreeNode> nodes, int k)
      : nodes_(std::move(nodes)), k_(k) {}

  std::vector<double> PredictProba(FeatureView x) const;
  std::size_t NodeCount() const { return nodes_.size(); }
  std::size_t LeafCount() const;
  int Depth() const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }

 private:
  std::vector<TreeNode> nodes_;
  int k_ = 0;
};

class KnnModel {
 public:
  KnnModel() = default;
  KnnModel(Dataset train, int neighbors)
      : train_(std::move(train)), neighbors_(neighbors) {}

  std::vector<double> PredictProba(FeatureView x) const;
  const Dataset& train() const { return train_; }
  int neighbors() const { return neighbors_; }

 private:
  Dataset train_;
  int neighbors_ = 5;
};

// Row-major k x (m+1) weight matrix; column m holds the bias.
struct LogisticWeights {
  std::size_t m = 0;
  int k = 0;
  std::vector<double> w;

  LogisticWeights() = default;
  LogisticWeights(std::size_t m_, int k_)
      : m(m_), k(k_), w(static_cast<std::size_t>(k_) * (m_ + 1), 0.0) {}
  double& at(int c, std::size_t j) { return w[static_cast<std::size_t>(c) * (m + 1) + j]; }
  double at(int c, std::size_t j) const {
    return w[static_cast<std::size_t>(c) * (m + 1) + j];
  }
};

class LogisticModel {
 public:
  LogisticModel() = default;
  LogisticModel(LogisticWeights weights, std::vector<double> loss_history)
      : weights_(std::move(weights)), loss_history_(std::move(loss_history)) {}

  std::vector<double> PredictProba(FeatureView x) const;
  const LogisticWeights& weights() const { return weights_; }
  // Regularized training loss before each epoch, plus the final loss.
  const std::vector<double>& loss_history() const { return loss_history_; }

 private:
  LogisticWeights weights_;
  std::vector<double> loss_history_;
};

class NaiveBayesModel {
 public:
  NaiveBayesModel() = default;
  NaiveBayesModel(std::vector<double> prior, std::vector<std::vector<double>> means,
                  std::vector<std::vector<double>> variances)
      : prior_(std::move(prior)),
        means_(std::move(means)),
        variances_(std::move(variances)) {}

  std::vector<double> PredictProba(FeatureView x) const;
  const std::vector<double>& prior() const { return prior_; }
  const std::vector<std::vector<double>>& means() const { return means_; }
  const std::vector<std::vector<double>>& variances() const { return variances_; }

 private:
  std::vector<double> prior_;  // zero for classes absent from training
  std::vector<std::vector<double>> means_;
  std::vector<std::vector<double>> variances_;
};

// Trained predictor with the uniform probability-vector contract. Immutable;
// safe to share across threads.
class Classifier {
 public:
  using State =
      std::variant<DecisionTreeModel, KnnModel, LogisticModel, NaiveBayesModel>;

  Classifier(ModelKind kind, std::size_t m, int k, State state)
      : kind_(kind), m_(m), k_(k), state_(std::move(state)) {}

  ModelKind kind() const { return kind_; }
  std::size_t m() const { return m_; }
  int k() const { return k_; }
  const State& state() const { return state_; }

  ProbabilityVector PredictProba(FeatureView x) const;
  int Predict(FeatureView x) const;
  // Fraction of rows whose prediction equals the label.
  double Accuracy(const Dataset& d) const;

 private:
  ModelKind kind_;
  std::size_t m_;
  int k_;
  State state_;
};

Classifier Fit(ModelKind kind, const TrainConfig& config, const Dataset& train);

// Mean cross-entropy plus (l2/2)*||W||^2, and its analytic gradient.
double LrLoss(const LogisticWeights& weights, const Dataset& batch, double l2);
LogisticWeights LrGradient(const LogisticWeights& weights, const Dataset& batch,
                           double l2);

// Versioned JSON dump; doubles round-trip exactly.
void SaveModel(const Classifier& model, std::ostream& out);
Classifier LoadModel(std::istream& in);

}  // namespace membrinf

#endif  // MEMBRINF_MODELS_H_
