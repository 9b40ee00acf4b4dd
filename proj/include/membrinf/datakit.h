#ifndef MEMBRINF_DATAKIT_H_
#define MEMBRINF_DATAKIT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "membrinf/common.h"

namespace membrinf {

using FeatureVector = std::vector<double>;
using FeatureView = std::span<const double>;

enum class FeatureKind { kContinuous, kCategorical };

// Labeled tabular data, row-major. Features are expected in [0,1] once a
// dataset leaves the loaders/generators; labels are class indices in [0,k).
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t m, int k);
  Dataset(std::size_t m, int k, std::vector<FeatureKind> kinds);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t m() const { return m_; }
  int k() const { return k_; }
  const std::vector<FeatureKind>& feature_kinds() const { return kinds_; }

  FeatureView row(std::size_t i) const {
    return {features_.data() + i * m_, m_};
  }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<double>& raw() const { return features_; }

  void Add(FeatureView x, int label);
  void Reserve(std::size_t n);

  // New dataset with the same schema holding rows `idx` in order.
  Dataset Subset(std::span<const std::size_t> idx) const;
  Dataset EmptyLike() const;

  // Per-class instance counts, length k.
  std::vector<std::size_t> ClassCounts() const;
  int ClassesPresent() const;

 private:
  std::size_t m_ = 0;
  int k_ = 0;
  std::vector<FeatureKind> kinds_;
  std::vector<double> features_;
  std::vector<int> labels_;
};

// Concatenation of datasets that share a schema.
Dataset Concat(std::span<const Dataset> parts);

// ---------------------------------------------------------------------------
// Ingestion and serialization.

struct CsvSchema {
  std::string label_column;
  std::set<std::string> categorical_columns;
};

// Loads an RFC-4180 CSV with a header row. Categorical columns are one-hot
// encoded (categories in sorted order), continuous columns min-max scaled;
// a constant column scales to 0. The token "?" is rejected as a missing value.
Dataset LoadCsv(const std::filesystem::path& path, const CsvSchema& schema);
Dataset ParseCsv(std::istream& in, const CsvSchema& schema);

// Newline-delimited records behind a one-line JSON header {m, k, feature_kinds}.
void WriteDataset(const Dataset& d, std::ostream& out);
Dataset ReadDataset(std::istream& in);
void SaveDataset(const Dataset& d, const std::filesystem::path& path);
Dataset LoadDataset(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic generators.

// Gaussian blobs around k centroids drawn uniformly in [0,1]^m, clipped to
// the unit cube. Instance i belongs to class i % k.
Dataset SynthBlobs(std::size_t n, std::size_t m, int k, double sigma,
                   std::uint64_t seed);

struct PurchaseProfileParams {
  double base_rate_low = 0.05;
  double base_rate_high = 0.25;
  // Fraction of products that each profile favours.
  double favourite_fraction = 0.2;
  double boost_low = 0.25;
  double boost_high = 0.5;
};

// Binary purchase histories drawn from k planted propensity profiles, then
// relabelled by k-means with k centres. Re-seeds k-means up to 10 times when
// a cluster ends up empty.
Dataset SynthPurchases(std::size_t n, std::size_t m, int k, std::uint64_t seed,
                       const PurchaseProfileParams& params = {});

struct KMeansResult {
  std::vector<int> labels;
  std::vector<FeatureVector> centroids;
  // Sum of squared distances after each assignment step.
  std::vector<double> objective;
  int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding; stops on an assignment fixpoint
// or after max_iter iterations.
KMeansResult KMeans(std::span<const FeatureVector> points, int k, int max_iter,
                    std::uint64_t seed);
KMeansResult KMeans(const Dataset& d, int k, int max_iter, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Metrics and perturbation.

// Population std per feature within each class, averaged over features and
// then over the classes that have instances.
double InClassStd(const Dataset& d);

// Adds U[0, sigma] to every feature and clips to [0,1].
FeatureVector AddUniformNoise(FeatureView x, double sigma, std::uint64_t seed);
// Applies AddUniformNoise to every row with per-row derived seeds.
Dataset AddUniformNoise(const Dataset& d, double sigma, std::uint64_t seed);

// Descriptor of one feature. Continuous features use the moments and range;
// categorical-encoded features use the frequency table.
struct FeatureDescriptor {
  FeatureKind kind = FeatureKind::kContinuous;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::map<double, double> frequencies;
};

struct FeatureStats {
  std::vector<FeatureDescriptor> features;
  std::vector<double> class_prior;
  // Optional class-conditional descriptors, indexed [class][feature].
  std::vector<std::vector<FeatureDescriptor>> per_class;

  std::size_t m() const { return features.size(); }
  int k() const { return static_cast<int>(class_prior.size()); }
};

FeatureStats ComputeFeatureStats(const Dataset& d, bool per_class = false);

// ---------------------------------------------------------------------------
// Splitting.

struct SplitPlan {
  int fold_count = 10;
  int run_count = 10;
  std::uint64_t seed = 0;
};

struct FoldSplit {
  int run = 0;
  int fold = 0;
  Dataset train;
  Dataset test;
};

struct KFoldResult {
  std::vector<FoldSplit> splits;  // run-major, fold-minor
  std::vector<std::string> warnings;
};

// Stratified k-fold, repeated run_count times with reshuffling. Classes with
// fewer instances than fold_count are spread without stratification and
// reported in `warnings`.
KFoldResult KFoldSplits(const Dataset& d, const SplitPlan& plan);

// Fold index for every row of `d` for a single run.
std::vector<int> StratifiedFoldAssignment(const Dataset& d, int fold_count,
                                          std::uint64_t seed,
                                          std::vector<std::string>* warnings);

// Random partition into two datasets; `first_fraction` of every class goes to
// the first part.
std::pair<Dataset, Dataset> StratifiedHalves(const Dataset& d,
                                             double first_fraction,
                                             std::uint64_t seed);

// Splits `d` into `parties` disjoint datasets. Heterogeneity 0 is a
// stratified equal split; larger values draw per-class party proportions
// from a symmetric Dirichlet whose concentration falls geometrically from
// 100 (knob near 0) to 0.5 (knob 1), rescaled so parties stay equal in
// size. Inside each class the knob also blends a random order with the order
// along a random direction before parties take contiguous chunks. Every
// party keeps at least two classes.
std::vector<Dataset> DisjointPartySplit(const Dataset& d, int parties,
                                        double heterogeneity,
                                        std::uint64_t seed);

double DirichletConcentration(double heterogeneity);

// Mean Euclidean distance between class-conditional centroids of a and b over
// classes present in both.
double InterPartyInClassDistance(const Dataset& a, const Dataset& b);

}  // namespace membrinf

#endif  // MEMBRINF_DATAKIT_H_
