#include "membrinf/models.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include "json.hpp"

namespace membrinf {
namespace {

constexpr double kPi = 3.14159265358979323846;

void RequireTrainable(const Dataset& train) {
  if (train.empty()) throw ArgumentError("training set is empty");
  if (train.ClassesPresent() < 2) {
    throw ArgumentError("degenerate single-class dataset");
  }
}

void SoftmaxInPlace(std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

double Gini(std::span<const std::size_t> counts, std::size_t n) {
  if (n == 0) return 0.0;
  double s = 0.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    s += p * p;
  }
  return 1.0 - s;
}

// ---------------------------------------------------------------------------
// CART

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& d, const TreeConfig& cfg) : d_(d), cfg_(cfg) {}

  std::vector<TreeNode> Build() {
    std::vector<std::size_t> idx(d_.size());
    std::iota(idx.begin(), idx.end(), 0);
    Grow(idx, 0);
    return std::move(nodes_);
  }

 private:
  int Grow(std::vector<std::size_t>& idx, int depth) {
    const int k = d_.k();
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i : idx) ++counts[static_cast<std::size_t>(d_.label(i))];
    TreeNode node;
    node.samples = idx.size();
    node.gini = Gini(counts, idx.size());
    node.distribution.resize(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
      node.distribution[static_cast<std::size_t>(c)] =
          static_cast<double>(counts[static_cast<std::size_t>(c)]) /
          static_cast<double>(idx.size());
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);

    const bool depth_capped = cfg_.max_depth >= 0 && depth >= cfg_.max_depth;
    if (depth_capped || node.gini <= 0.0 ||
        idx.size() < static_cast<std::size_t>(cfg_.min_samples_split)) {
      return id;
    }
    const auto split = BestSplit(idx, counts);
    if (!split) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (d_.row(i)[split->feature] <= split->threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    const int l = Grow(left, depth + 1);
    const int r = Grow(right, depth + 1);
    nodes_[static_cast<std::size_t>(id)].feature = static_cast<int>(split->feature);
    nodes_[static_cast<std::size_t>(id)].threshold = split->threshold;
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  struct Split {
    std::size_t feature;
    double threshold;
  };

  // Exhaustive search over midpoints between consecutive distinct values.
  std::optional<Split> BestSplit(const std::vector<std::size_t>& idx,
                                 const std::vector<std::size_t>& counts) {
    const std::size_t n = idx.size();
    const std::size_t k = counts.size();
    double best = std::numeric_limits<double>::infinity();
    std::optional<Split> out;
    std::vector<std::pair<double, int>> column(n);
    std::vector<std::size_t> left(k), right(k);
    for (std::size_t j = 0; j < d_.m(); ++j) {
      for (std::size_t t = 0; t < n; ++t) {
        column[t] = {d_.row(idx[t])[j], d_.label(idx[t])};
      }
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;
      std::fill(left.begin(), left.end(), 0);
      right = counts;
      // Running sums of squared class counts give O(1) gini updates.
      double left_sq = 0.0;
      double right_sq = 0.0;
      for (std::size_t c : counts) right_sq += static_cast<double>(c * c);
      for (std::size_t t = 0; t + 1 < n; ++t) {
        const auto y = static_cast<std::size_t>(column[t].second);
        left_sq += 2.0 * static_cast<double>(left[y]) + 1.0;
        right_sq -= 2.0 * static_cast<double>(right[y]) - 1.0;
        ++left[y];
        --right[y];
        if (column[t].first == column[t + 1].first) continue;
        const double nl = static_cast<double>(t + 1);
        const double nr = static_cast<double>(n - t - 1);
        // n * weighted gini = nl - left_sq/nl + nr - right_sq/nr
        const double score = (nl - left_sq / nl) + (nr - right_sq / nr);
        if (score < best - 1e-12) {
          best = score;
          out = Split{j, 0.5 * (column[t].first + column[t + 1].first)};
        }
      }
    }
    return out;
  }

  const Dataset& d_;
  const TreeConfig& cfg_;
  std::vector<TreeNode> nodes_;
};

// Minimal cost-complexity pruning: collapse the weakest link while its
// effective alpha does not exceed `alpha`.
std::vector<TreeNode> PruneTree(std::vector<TreeNode> nodes, double alpha) {
  if (alpha <= 0.0 || nodes.empty()) return nodes;
  const double total = static_cast<double>(nodes[0].samples);
  auto node_risk = [&](const TreeNode& n) {
    return static_cast<double>(n.samples) / total * n.gini;
  };
  for (;;) {
    // Post-order subtree risk and leaf counts.
    std::vector<double> subtree_risk(nodes.size(), 0.0);
    std::vector<int> leaves(nodes.size(), 0);
    std::function<void(int)> visit = [&](int id) {
      auto& n = nodes[static_cast<std::size_t>(id)];
      if (n.feature < 0) {
        subtree_risk[static_cast<std::size_t>(id)] = node_risk(n);
        leaves[static_cast<std::size_t>(id)] = 1;
        return;
      }
      visit(n.left);
      visit(n.right);
      subtree_risk[static_cast<std::size_t>(id)] =
          subtree_risk[static_cast<std::size_t>(n.left)] +
          subtree_risk[static_cast<std::size_t>(n.right)];
      leaves[static_cast<std::size_t>(id)] =
          leaves[static_cast<std::size_t>(n.left)] +
          leaves[static_cast<std::size_t>(n.right)];
    };
    visit(0);
    int weakest = -1;
    double weakest_alpha = std::numeric_limits<double>::infinity();
    std::function<void(int)> scan = [&](int id) {
      const auto& n = nodes[static_cast<std::size_t>(id)];
      if (n.feature < 0) return;
      const double g = (node_risk(n) - subtree_risk[static_cast<std::size_t>(id)]) /
                       (leaves[static_cast<std::size_t>(id)] - 1);
      if (g < weakest_alpha) {
        weakest_alpha = g;
        weakest = id;
      }
      scan(n.left);
      scan(n.right);
    };
    scan(0);
    if (weakest < 0 || weakest_alpha > alpha) break;
    auto& w = nodes[static_cast<std::size_t>(weakest)];
    w.feature = -1;
    w.left = w.right = -1;
  }
  // Compact away unreachable nodes.
  std::vector<TreeNode> out;
  std::function<int(int)> copy = [&](int id) {
    const TreeNode& n = nodes[static_cast<std::size_t>(id)];
    const int nid = static_cast<int>(out.size());
    out.push_back(n);
    if (n.feature >= 0) {
      const int l = copy(n.left);
      const int r = copy(n.right);
      out[static_cast<std::size_t>(nid)].left = l;
      out[static_cast<std::size_t>(nid)].right = r;
    }
    return nid;
  };
  copy(0);
  return out;
}

// ---------------------------------------------------------------------------
// Logistic regression

// Loss and (optionally) gradient in one pass.
double LossAndGradient(const LogisticWeights& W, const Dataset& batch, double l2,
                       LogisticWeights* grad) {
  const std::size_t m = W.m;
  const int k = W.k;
  const std::size_t n = batch.size();
  if (batch.m() != m || batch.k() != k) {
    throw ArgumentError("weights and batch shapes disagree");
  }
  if (grad) *grad = LogisticWeights(m, k);
  double loss = 0.0;
  std::vector<double> z(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    const FeatureView x = batch.row(i);
    for (int c = 0; c < k; ++c) {
      const double* w = &W.w[static_cast<std::size_t>(c) * (m + 1)];
      double s = w[m];
      for (std::size_t j = 0; j < m; ++j) s += w[j] * x[j];
      z[static_cast<std::size_t>(c)] = s;
    }
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double log_norm = mx + std::log(sum);
    const int y = batch.label(i);
    loss += log_norm - z[static_cast<std::size_t>(y)];
    if (grad) {
      for (int c = 0; c < k; ++c) {
        const double p = std::exp(z[static_cast<std::size_t>(c)] - log_norm);
        const double r = (p - (c == y ? 1.0 : 0.0)) / static_cast<double>(n);
        double* g = &grad->w[static_cast<std::size_t>(c) * (m + 1)];
        for (std::size_t j = 0; j < m; ++j) g[j] += r * x[j];
        g[m] += r;
      }
    }
  }
  loss = n > 0 ? loss / static_cast<double>(n) : 0.0;
  double sq = 0.0;
  for (double v : W.w) sq += v * v;
  loss += 0.5 * l2 * sq;
  if (grad) {
    for (std::size_t t = 0; t < W.w.size(); ++t) grad->w[t] += l2 * W.w[t];
  }
  return loss;
}

LogisticModel FitLogistic(const Dataset& d, const LogisticConfig& cfg) {
  LogisticWeights W(d.m(), d.k());
  LogisticWeights grad;
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(cfg.epochs) + 1);
  // Proximal step for the L2 term: the explicit step diverges once
  // learning_rate * l2 exceeds 2, the implicit one shrinks for any l2.
  const double shrink = 1.0 / (1.0 + cfg.learning_rate * cfg.l2);
  for (int e = 0; e < cfg.epochs; ++e) {
    history.push_back(LossAndGradient(W, d, cfg.l2, &grad));
    for (std::size_t t = 0; t < W.w.size(); ++t) {
      const double data_grad = grad.w[t] - cfg.l2 * W.w[t];
      W.w[t] = (W.w[t] - cfg.learning_rate * data_grad) * shrink;
    }
  }
  history.push_back(LossAndGradient(W, d, cfg.l2, nullptr));
  return LogisticModel(std::move(W), std::move(history));
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes

NaiveBayesModel FitBayes(const Dataset& d, const BayesConfig& cfg) {
  const std::size_t m = d.m();
  const auto k = static_cast<std::size_t>(d.k());
  const double n = static_cast<double>(d.size());
  double max_var = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) mean += d.row(i)[j];
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double t = d.row(i)[j] - mean;
      var += t * t;
    }
    max_var = std::max(max_var, var / n);
  }
  // Absolute floor keeps all-constant inputs finite.
  const double eps = std::max(cfg.var_smoothing * max_var, 1e-12);

  const auto counts = d.ClassCounts();
  std::vector<double> prior(k, 0.0);
  std::vector<std::vector<double>> means(k, std::vector<double>(m, 0.0));
  std::vector<std::vector<double>> vars(k, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto& mu = means[static_cast<std::size_t>(d.label(i))];
    for (std::size_t j = 0; j < m; ++j) mu[j] += d.row(i)[j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    prior[c] = static_cast<double>(counts[c]) / n;
    if (counts[c] == 0) continue;
    for (double& v : means[c]) v /= static_cast<double>(counts[c]);
  }
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto c = static_cast<std::size_t>(d.label(i));
    for (std::size_t j = 0; j < m; ++j) {
      const double t = d.row(i)[j] - means[c][j];
      vars[c][j] += t * t;
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (double& v : vars[c]) {
      v = (counts[c] > 0 ? v / static_cast<double>(counts[c]) : 0.0) + eps;
    }
  }
  return NaiveBayesModel(std::move(prior), std::move(means), std::move(vars));
}

std::string KindTag(ModelKind k) { return std::string(ModelKindName(k)); }

}  // namespace

// ---------------------------------------------------------------------------
// ProbabilityVector helpers

int ArgmaxLowest(std::span<const double> p) {
  int best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

int ProbabilityVector::Argmax() const { return ArgmaxLowest(probs_); }

double ProbabilityVector::Max() const {
  return probs_.empty() ? 0.0 : *std::max_element(probs_.begin(), probs_.end());
}

bool IsValidSimplex(std::span<const double> p, double tol) {
  if (p.empty()) return false;
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

std::string_view ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kDecisionTree: return "DT";
    case ModelKind::kKnn: return "kNN";
    case ModelKind::kLogisticRegression: return "LR";
    case ModelKind::kNaiveBayes: return "NB";
  }
  return "?";
}

ModelKind ParseModelKind(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "dt" || s == "decisiontree" || s == "tree") return ModelKind::kDecisionTree;
  if (s == "knn" || s == "k-nn") return ModelKind::kKnn;
  if (s == "lr" || s == "logisticregression" || s == "logistic") {
    return ModelKind::kLogisticRegression;
  }
  if (s == "nb" || s == "naivebayes" || s == "bayes") return ModelKind::kNaiveBayes;
  throw ArgumentError("unknown model kind '" + std::string(name) + "'");
}

void TrainConfig::Validate() const {
  if (tree.min_samples_split < 2) {
    throw ArgumentError("min_samples_split must be >= 2");
  }
  if (tree.ccp_alpha < 0.0) throw ArgumentError("ccp_alpha must be >= 0");
  if (knn.neighbors < 1) throw ArgumentError("neighbor_count must be >= 1");
  if (!(logistic.learning_rate > 0.0)) {
    throw ArgumentError("learning_rate must be positive");
  }
  if (logistic.epochs < 0) throw ArgumentError("epochs must be >= 0");
  if (logistic.l2 < 0.0) throw ArgumentError("l2 must be >= 0");
  if (!(bayes.var_smoothing > 0.0)) {
    throw ArgumentError("var_smoothing must be positive");
  }
}

// ---------------------------------------------------------------------------
// Fitted-state prediction

std::vector<double> DecisionTreeModel::PredictProba(FeatureView x) const {
  std::size_t id = 0;
  while (nodes_[id].feature >= 0) {
    const TreeNode& n = nodes_[id];
    id = static_cast<std::size_t>(
        x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes_[id].distribution;
}

std::size_t DecisionTreeModel::LeafCount() const {
  return static_cast<std::size_t>(std::count_if(
      nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

int DecisionTreeModel::Depth() const {
  std::function<int(int)> depth = [&](int id) -> int {
    const auto& n = nodes_[static_cast<std::size_t>(id)];
    if (n.feature < 0) return 0;
    return 1 + std::max(depth(n.left), depth(n.right));
  };
  return nodes_.empty() ? 0 : depth(0);
}

std::vector<double> KnnModel::PredictProba(FeatureView x) const {
  const std::size_t n = train_.size();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const FeatureView r = train_.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      const double t = r[j] - x[j];
      s += t * t;
    }
    dist[i] = {s, i};
  }
  const std::size_t kn = std::min<std::size_t>(static_cast<std::size_t>(neighbors_), n);
  // Pair ordering breaks distance ties by lower training index.
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kn),
                    dist.end());
  std::vector<double> votes(static_cast<std::size_t>(train_.k()), 0.0);
  for (std::size_t t = 0; t < kn; ++t) {
    votes[static_cast<std::size_t>(train_.label(dist[t].second))] += 1.0;
  }
  for (double& v : votes) v /= static_cast<double>(kn);
  return votes;
}

std::vector<double> LogisticModel::PredictProba(FeatureView x) const {
  const std::size_t m = weights_.m;
  std::vector<double> z(static_cast<std::size_t>(weights_.k));
  for (int c = 0; c < weights_.k; ++c) {
    double s = weights_.at(c, m);
    for (std::size_t j = 0; j < m; ++j) s += weights_.at(c, j) * x[j];
    z[static_cast<std::size_t>(c)] = s;
  }
  SoftmaxInPlace(z);
  return z;
}

std::vector<double> NaiveBayesModel::PredictProba(FeatureView x) const {
  const std::size_t k = prior_.size();
  std::vector<double> log_joint(k, -std::numeric_limits<double>::infinity());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    if (prior_[c] <= 0.0) continue;
    double s = std::log(prior_[c]);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double var = variances_[c][j];
      const double t = x[j] - means_[c][j];
      s -= 0.5 * std::log(2.0 * kPi * var) + t * t / (2.0 * var);
    }
    log_joint[c] = s;
    mx = std::max(mx, s);
  }
  std::vector<double> p(k, 0.0);
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (prior_[c] <= 0.0) continue;
    p[c] = std::exp(log_joint[c] - mx);
    sum += p[c];
  }
  for (double& v : p) v /= sum;
  return p;
}

// ---------------------------------------------------------------------------
// Classifier

ProbabilityVector Classifier::PredictProba(FeatureView x) const {
  if (x.size() != m_) {
    throw ArgumentError("query has " + std::to_string(x.size()) +
                        " features, model expects " + std::to_string(m_));
  }
  return ProbabilityVector(
      std::visit([&](const auto& s) { return s.PredictProba(x); }, state_));
}

int Classifier::Predict(FeatureView x) const { return PredictProba(x).Argmax(); }

double Classifier::Accuracy(const Dataset& d) const {
  if (d.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    hits += Predict(d.row(i)) == d.label(i) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(d.size());
}

Classifier Fit(ModelKind kind, const TrainConfig& config, const Dataset& train) {
  config.Validate();
  RequireTrainable(train);
  switch (kind) {
    case ModelKind::kDecisionTree: {
      auto nodes = TreeBuilder(train, config.tree).Build();
      nodes = PruneTree(std::move(nodes), config.tree.ccp_alpha);
      return Classifier(kind, train.m(), train.k(),
                        DecisionTreeModel(std::move(nodes), train.k()));
    }
    case ModelKind::kKnn:
      return Classifier(kind, train.m(), train.k(),
                        KnnModel(train, config.knn.neighbors));
    case ModelKind::kLogisticRegression:
      return Classifier(kind, train.m(), train.k(),
                        FitLogistic(train, config.logistic));
    case ModelKind::kNaiveBayes:
      return Classifier(kind, train.m(), train.k(), FitBayes(train, config.bayes));
  }
  throw ArgumentError("unknown model kind");
}

double LrLoss(const LogisticWeights& weights, const Dataset& batch, double l2) {
  return LossAndGradient(weights, batch, l2, nullptr);
}

LogisticWeights LrGradient(const LogisticWeights& weights, const Dataset& batch,
                           double l2) {
  LogisticWeights g;
  LossAndGradient(weights, batch, l2, &g);
  return g;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr int kModelFormatVersion = 1;

nlohmann::json DatasetToJson(const Dataset& d) {
  nlohmann::json j;
  j["m"] = d.m();
  j["k"] = d.k();
  j["features"] = d.raw();
  j["labels"] = d.labels();
  return j;
}

Dataset DatasetFromJson(const nlohmann::json& j) {
  const auto m = j.at("m").get<std::size_t>();
  Dataset d(m, j.at("k").get<int>());
  const auto f = j.at("features").get<std::vector<double>>();
  const auto y = j.at("labels").get<std::vector<int>>();
  if (f.size() != y.size() * m) throw ParseError("knn training set shape", 0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    d.Add(FeatureView(f.data() + i * m, m), y[i]);
  }
  return d;
}

}  // namespace

void SaveModel(const Classifier& model, std::ostream& out) {
  nlohmann::json j;
  j["version"] = kModelFormatVersion;
  j["kind"] = KindTag(model.kind());
  j["m"] = model.m();
  j["k"] = model.k();
  nlohmann::json s;
  std::visit(
      [&](const auto& st) {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, DecisionTreeModel>) {
          auto nodes = nlohmann::json::array();
          for (const auto& n : st.nodes()) {
            nodes.push_back({{"feature", n.feature},
                             {"threshold", n.threshold},
                             {"left", n.left},
                             {"right", n.right},
                             {"samples", n.samples},
                             {"gini", n.gini},
                             {"distribution", n.distribution}});
          }
          s["nodes"] = nodes;
        } else if constexpr (std::is_same_v<T, KnnModel>) {
          s["neighbors"] = st.neighbors();
          s["train"] = DatasetToJson(st.train());
        } else if constexpr (std::is_same_v<T, LogisticModel>) {
          s["weights"] = st.weights().w;
        } else {
          s["prior"] = st.prior();
          s["means"] = st.means();
          s["variances"] = st.variances();
        }
      },
      model.state());
  j["state"] = s;
  out << j.dump() << '\n';
}

Classifier LoadModel(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what(), 1);
  }
  if (j.value("version", 0) != kModelFormatVersion) {
    throw ParseError("unsupported model format version", 1);
  }
  const ModelKind kind = ParseModelKind(j.at("kind").get<std::string>());
  const auto m = j.at("m").get<std::size_t>();
  const int k = j.at("k").get<int>();
  const auto& s = j.at("state");
  switch (kind) {
    case ModelKind::kDecisionTree: {
      std::vector<TreeNode> nodes;
      for (const auto& n : s.at("nodes")) {
        TreeNode t;
        t.feature = n.at("feature").get<int>();
        t.threshold = n.at("threshold").get<double>();
        t.left = n.at("left").get<int>();
        t.right = n.at("right").get<int>();
        t.samples = n.at("samples").get<std::size_t>();
        t.gini = n.at("gini").get<double>();
        t.distribution = n.at("distribution").get<std::vector<double>>();
        nodes.push_back(std::move(t));
      }
      return Classifier(kind, m, k, DecisionTreeModel(std::move(nodes), k));
    }
    case ModelKind::kKnn:
      return Classifier(kind, m, k,
                        KnnModel(DatasetFromJson(s.at("train")),
                                 s.at("neighbors").get<int>()));
    case ModelKind::kLogisticRegression: {
      LogisticWeights w(m, k);
      w.w = s.at("weights").get<std::vector<double>>();
      if (w.w.size() != static_cast<std::size_t>(k) * (m + 1)) {
        throw ParseError("logistic weight shape", 1);
      }
      return Classifier(kind, m, k, LogisticModel(std::move(w), {}));
    }
    case ModelKind::kNaiveBayes:
      return Classifier(
          kind, m, k,
          NaiveBayesModel(s.at("prior").get<std::vector<double>>(),
                          s.at("means").get<std::vector<std::vector<double>>>(),
                          s.at("variances").get<std::vector<std::vector<double>>>()));
  }
  throw ParseError("unknown model kind", 1);
}

}  // namespace membrinf
